#!/usr/bin/env python3
"""
Tests for the synchronous message-passing substrate
"""

import numpy as np
import pytest

from dlns.agent_sim import Message, MessageKind, Metrics, Protocol, Simulator, payload_size, simulated_clock_advance
from dlns.errors import HarnessError


class Relay(Protocol):
    """Agent 0 starts a token that walks up the id chain"""

    name = "relay"

    def __init__(self, last: int, checks: int = 1):
        self.last = last
        self.checks = checks
        self.seen = []

    def step(self, agent, inbox, round_index):
        self.seen.extend((round_index, agent, m.sender) for m in inbox)
        holds = (agent == 0 and round_index == 0) or bool(inbox)
        if not holds:
            return [], 0
        if agent == self.last:
            return [], self.checks
        return [Message(MessageKind.UTIL, agent, agent + 1, np.zeros(3))], self.checks


class Scripted(Protocol):
    def __init__(self, outgoing=None, checks=0):
        self.outgoing = outgoing or {}
        self.checks = checks

    def step(self, agent, inbox, round_index):
        if round_index == 0:
            return self.outgoing.get(agent, []), self.checks
        return [], 0


def test_payload_sizes():
    assert payload_size(None) == 0
    assert payload_size(7) == 1
    assert payload_size((1, 2)) == 2
    assert payload_size((np.zeros(4), np.zeros((2, 3)))) == 10
    assert payload_size({"a": 1, "b": [1, 2]}) == 3
    assert Message(MessageKind.VALUE, 0, 1, (3, 4)).size == 2


def test_chain_delivers_one_hop_per_round():
    sim = Simulator(range(4), t_cc=1.0, t_msg=10.0)
    protocol = Relay(last=3, checks=5)
    delta = sim.run_phase(protocol)
    assert [(r, a, s) for r, a, s in protocol.seen] == [(1, 1, 0), (2, 2, 1), (3, 3, 2)]
    assert delta.messages == 3
    assert delta.messages_by_kind[MessageKind.UTIL] == 3
    assert delta.total_payload == 9
    assert delta.max_payload == 3
    assert delta.constraint_checks == 20
    assert delta.max_agent_checks == 5
    # busiest agent 5 checks, 3 sequential hops
    assert delta.simulated_time == pytest.approx(5 * 1.0 + 3 * 10.0)


def test_metrics_accumulate_across_phases():
    sim = Simulator(range(3), t_cc=1.0, t_msg=1.0)
    sim.run_phase(Relay(last=2))
    sim.run_phase(Relay(last=2))
    assert sim.metrics.messages == 4
    window = sim.take_window()
    assert window.messages == 4
    assert sim.take_window().messages == 0
    assert sim.metrics.messages == 4


def test_inboxes_are_sorted_by_sender():
    seen = []

    class Collect(Protocol):
        def step(self, agent, inbox, round_index):
            if agent == 0:
                seen.extend(m.sender for m in inbox)
            if round_index == 0 and agent != 0:
                return [Message(MessageKind.VALUE, agent, 0, 1)], 0
            return [], 0

    Simulator([3, 1, 2, 0]).run_phase(Collect())
    assert seen == [1, 2, 3]


def test_harness_rejects_invalid_traffic():
    with pytest.raises(HarnessError):
        Simulator(range(2)).run_phase(Scripted({0: [Message(MessageKind.VALUE, 0, 9, 1)]}))
    with pytest.raises(HarnessError):
        Simulator(range(2)).run_phase(Scripted({0: [Message(MessageKind.VALUE, 1, 0, 1)]}))
    with pytest.raises(HarnessError):
        Simulator(range(2)).run_phase(Scripted(checks=-1))


def test_phase_that_never_quiesces_is_stopped():
    class PingPong(Protocol):
        def step(self, agent, inbox, round_index):
            if round_index == 0 and agent == 0 or inbox:
                return [Message(MessageKind.VALUE, agent, 1 - agent, 0)], 0
            return [], 0

    with pytest.raises(HarnessError):
        Simulator(range(2), max_rounds_slack=2).run_phase(PingPong())


def test_clock_advance():
    assert simulated_clock_advance({}, 0, 1.0, 100.0) == 0.0
    assert simulated_clock_advance({1: 4, 2: 9}, 2, 2.0, 100.0) == 218.0


def test_metrics_merge_keeps_max_payload():
    a = Metrics(total_payload=3, max_payload=3)
    b = Metrics(total_payload=5, max_payload=2)
    a.merge(b)
    assert a.total_payload == 8
    assert a.max_payload == 3


if __name__ == "__main__":
    print("🧪 Testing the message-passing substrate")
    print("=" * 50)
    raise SystemExit(pytest.main([__file__, "-v"]))
