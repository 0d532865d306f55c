"""
Synchronous message-passing substrate
Runs protocol phases as barrier-delimited rounds over a fixed set of agents and
accounts messages, payload sizes, constraint checks and simulated time.
"""

import logging
import time
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

import dlns_config
from dlns.errors import HarnessError

logger = logging.getLogger(__name__)


class MessageKind(Enum):
    UTIL = "UTIL"
    VALUE = "VALUE"
    BOUNDS = "BOUNDS"


def payload_size(payload: Any) -> int:
    """Number of scalar entries in a payload"""
    if payload is None:
        return 0
    if isinstance(payload, np.ndarray):
        return int(payload.size)
    if hasattr(payload, "payload_entries"):
        return payload.payload_entries()
    if isinstance(payload, Mapping):
        return sum(payload_size(v) for v in payload.values())
    if isinstance(payload, (list, tuple)):
        return sum(payload_size(v) for v in payload)
    return 1


@dataclass(frozen=True)
class Message:
    """One simulated message; `size` counts its scalar entries.

    VALUE carries the sender's (x_check, x_hat) pair, two entries. DPOP-DBR
    parent-to-child VALUE is the exception: it carries the child's whole separator
    assignment as two tuples, 2 * |sep| entries, since a separator member need not
    be a neighbor of the child. BOUNDS carries one (LB, UB) pair.
    """

    kind: MessageKind
    sender: int
    receiver: int
    payload: Any
    size: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "size", payload_size(self.payload))


@dataclass
class Metrics:
    messages_by_kind: Counter = field(default_factory=Counter)
    total_payload: int = 0
    max_payload: int = 0
    constraint_checks_per_agent: Counter = field(default_factory=Counter)
    simulated_time: float = 0.0
    wall_time: float = 0.0

    @property
    def messages(self) -> int:
        return sum(self.messages_by_kind.values())

    @property
    def constraint_checks(self) -> int:
        return sum(self.constraint_checks_per_agent.values())

    @property
    def max_agent_checks(self) -> int:
        return max(self.constraint_checks_per_agent.values(), default=0)

    def record(self, message: Message):
        self.messages_by_kind[message.kind] += 1
        self.total_payload += message.size
        self.max_payload = max(self.max_payload, message.size)

    def merge(self, other: "Metrics") -> "Metrics":
        """Accumulate `other` into self (max_payload keeps the maximum)"""
        self.messages_by_kind.update(other.messages_by_kind)
        self.total_payload += other.total_payload
        self.max_payload = max(self.max_payload, other.max_payload)
        self.constraint_checks_per_agent.update(other.constraint_checks_per_agent)
        self.simulated_time += other.simulated_time
        self.wall_time += other.wall_time
        return self


class Protocol(ABC):
    """One protocol phase, executed agent by agent in synchronous rounds"""

    name = "phase"

    @abstractmethod
    def step(self, agent: int, inbox: List[Message], round_index: int) -> Tuple[List[Message], int]:
        """Handle one round for `agent`; return (outgoing messages, constraint checks)"""


def simulated_clock_advance(checks: Mapping[int, int], hops: int,
                            t_cc: float, t_msg: float) -> float:
    """Busiest agent's compute plus one message latency per sequential hop"""
    return max(checks.values(), default=0) * t_cc + hops * t_msg


class Simulator:
    """Deterministic round-based scheduler with exactly-once delivery"""

    def __init__(self, agents: Iterable[int], t_cc: Optional[float] = None,
                 t_msg: Optional[float] = None, max_rounds_slack: Optional[int] = None):
        config = dlns_config.get_simulation_config()
        self.agents = sorted(agents)
        self._known = set(self.agents)
        self.t_cc = config["t_cc"] if t_cc is None else t_cc
        self.t_msg = config["t_msg"] if t_msg is None else t_msg
        self.max_rounds_slack = config["max_rounds_slack"] if max_rounds_slack is None else max_rounds_slack
        self.metrics = Metrics()
        self.window = Metrics()
        self.sent: Counter = Counter()
        self.received: Counter = Counter()

    def run_phase(self, protocol: Protocol) -> Metrics:
        """Run `protocol` until no message is in flight; return the phase's metric delta"""
        started = time.perf_counter()
        delta = Metrics()
        max_rounds = len(self.agents) + self.max_rounds_slack
        in_flight: List[Message] = []
        hops = 0
        round_index = 0
        while True:
            if round_index >= max_rounds:
                raise HarnessError(f"phase {protocol.name} did not quiesce within {max_rounds} rounds")
            mailboxes: Dict[int, List[Message]] = {agent: [] for agent in self.agents}
            for message in in_flight:
                mailboxes[message.receiver].append(message)
                self.received[message.kind] += 1
            outgoing: List[Message] = []
            for agent in self.agents:
                inbox = sorted(mailboxes[agent], key=lambda m: m.sender)
                messages, checks = protocol.step(agent, inbox, round_index)
                if checks < 0:
                    raise HarnessError(f"agent {agent} reported negative constraint checks")
                if checks:
                    delta.constraint_checks_per_agent[agent] += checks
                for message in messages:
                    if message.receiver not in self._known:
                        raise HarnessError(f"agent {agent} sent {message.kind.value} to unknown agent {message.receiver}")
                    if message.sender != agent:
                        raise HarnessError(f"agent {agent} sent a message as agent {message.sender}")
                    delta.record(message)
                    self.sent[message.kind] += 1
                outgoing.extend(messages)
            round_index += 1
            if not outgoing:
                break
            hops += 1
            in_flight = outgoing
        if self.sent != self.received:
            raise HarnessError(f"delivery mismatch after {protocol.name}: sent {dict(self.sent)}, received {dict(self.received)}")
        delta.simulated_time = simulated_clock_advance(delta.constraint_checks_per_agent, hops, self.t_cc, self.t_msg)
        delta.wall_time = time.perf_counter() - started
        self.metrics.merge(delta)
        self.window.merge(delta)
        logger.debug("phase %s: %d rounds, %d messages, %.1f sim units",
                     protocol.name, round_index, delta.messages, delta.simulated_time)
        return delta

    def take_window(self) -> Metrics:
        """Metrics accumulated since the previous call"""
        window, self.window = self.window, Metrics()
        return window
