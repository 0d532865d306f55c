"""
Instance file reader/writer
UTF-8 JSON documents holding variables, agents, functions, optional meeting
metadata and the generator parameters used to build the instance.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

from dlns.dcop import BinaryFunction, DcopInstance, Meeting, MeetingMetadata
from dlns.errors import InstanceParseError, StructuralError
from dlns.utility import format_utility, parse_utility

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def instance_to_dict(inst: DcopInstance) -> Dict[str, Any]:
    """Plain-data form of an instance, stable under re-serialization"""
    doc: Dict[str, Any] = {
        "format": FORMAT_VERSION,
        "name": inst.name,
        "params": dict(sorted(inst.params.items())),
        "variables": [
            {"id": var, "domain": list(inst.domains[var])} for var in inst.variables
        ],
        "agents": [
            {"id": agent, "owns": [inst.variable_of(agent)]} for agent in inst.agents
        ],
        "functions": [
            {
                "id": f.fid,
                "scope": list(f.scope),
                "table": [[vi, vj, format_utility(u)] for vi, vj, u in f.entries()],
            }
            for f in sorted(inst.functions, key=lambda f: f.fid)
        ],
    }
    if inst.meetings is not None:
        md = inst.meetings
        doc["meetings"] = {
            "horizon": md.horizon,
            "events": [
                {"variable": m.variable, "duration": m.duration, "participants": list(m.participants)}
                for _, m in sorted(md.meetings.items())
            ],
            "preferences": [
                {"participant": p, "slots": list(slots)} for p, slots in sorted(md.preferences.items())
            ],
        }
    return doc


def serialize(inst: DcopInstance) -> str:
    # one function per line keeps files diffable without exploding tables
    doc = instance_to_dict(inst)
    functions = doc.pop("functions")
    head = json.dumps(doc, indent=1, separators=(",", ": "))
    head = head[: head.rstrip().rfind("}")].rstrip()
    if functions:
        body = ",\n".join("  " + json.dumps(f, separators=(",", ":")) for f in functions)
        return f'{head},\n "functions": [\n{body}\n ]\n}}\n'
    return f'{head},\n "functions": []\n}}\n'


def _require(obj: Any, key: str, path: str, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise InstanceParseError("missing field", field=f"{path}.{key}" if path else key)
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise InstanceParseError(f"expected {kind.__name__}", field=f"{path}.{key}" if path else key)
    return value


def _int(value: Any, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceParseError("expected integer", field=field)
    return value


def instance_from_dict(doc: Dict[str, Any]) -> DcopInstance:
    if not isinstance(doc, dict):
        raise InstanceParseError("top level must be an object")
    variables: List[int] = []
    domains: Dict[int, tuple] = {}
    for i, entry in enumerate(_require(doc, "variables", "", list)):
        path = f"variables[{i}]"
        var = _int(_require(entry, "id", path), f"{path}.id")
        domain = _require(entry, "domain", path, list)
        variables.append(var)
        domains[var] = tuple(_int(v, f"{path}.domain") for v in domain)

    ownership: Dict[int, int] = {}
    for i, entry in enumerate(_require(doc, "agents", "", list)):
        path = f"agents[{i}]"
        agent = _int(_require(entry, "id", path), f"{path}.id")
        owns = _require(entry, "owns", path, list)
        if len(owns) != 1:
            raise InstanceParseError("each agent must own exactly one variable", field=f"{path}.owns")
        ownership[_int(owns[0], f"{path}.owns")] = agent

    functions: List[BinaryFunction] = []
    for i, entry in enumerate(_require(doc, "functions", "", list)):
        path = f"functions[{i}]"
        fid = _int(_require(entry, "id", path), f"{path}.id")
        scope = _require(entry, "scope", path, list)
        if len(scope) != 2:
            raise InstanceParseError("scope must list 2 variables", field=f"{path}.scope")
        scope = (_int(scope[0], f"{path}.scope"), _int(scope[1], f"{path}.scope"))
        for var in scope:
            if var not in domains:
                raise InstanceParseError(f"unknown variable {var}", field=f"{path}.scope")
        rows = []
        for j, row in enumerate(_require(entry, "table", path, list)):
            field = f"{path}.table[{j}]"
            if not isinstance(row, list) or len(row) != 3:
                raise InstanceParseError("table rows are [value_i, value_j, utility]", field=field)
            try:
                utility = parse_utility(row[2])
            except ValueError as e:
                raise InstanceParseError(str(e), field=field) from e
            rows.append((_int(row[0], field), _int(row[1], field), utility))
        try:
            functions.append(BinaryFunction.from_entries(fid, scope, (domains[scope[0]], domains[scope[1]]), rows))
        except StructuralError as e:
            raise InstanceParseError(str(e), field=path) from e

    meetings = None
    if "meetings" in doc:
        raw = doc["meetings"]
        horizon = _int(_require(raw, "horizon", "meetings"), "meetings.horizon")
        events = {}
        for i, entry in enumerate(_require(raw, "events", "meetings", list)):
            path = f"meetings.events[{i}]"
            var = _int(_require(entry, "variable", path), f"{path}.variable")
            events[var] = Meeting(
                variable=var,
                duration=_int(_require(entry, "duration", path), f"{path}.duration"),
                participants=tuple(_int(p, f"{path}.participants") for p in _require(entry, "participants", path, list)),
            )
        preferences = {}
        for i, entry in enumerate(_require(raw, "preferences", "meetings", list)):
            path = f"meetings.preferences[{i}]"
            participant = _int(_require(entry, "participant", path), f"{path}.participant")
            preferences[participant] = tuple(_int(s, f"{path}.slots") for s in _require(entry, "slots", path, list))
        meetings = MeetingMetadata(meetings=events, preferences=preferences, horizon=horizon)

    try:
        return DcopInstance(
            variables=variables,
            domains=domains,
            functions=functions,
            ownership=ownership,
            meetings=meetings,
            name=str(doc.get("name", "instance")),
            params=dict(doc.get("params", {})),
        )
    except StructuralError as e:
        raise InstanceParseError(str(e)) from e


def deserialize(text: str) -> DcopInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceParseError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    return instance_from_dict(doc)


def save_instance(inst: DcopInstance, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(serialize(inst), encoding="utf-8")
    logger.info("Wrote instance %s (%d variables, %d functions) to %s",
                inst.name, len(inst.variables), len(inst.functions), path)
    return path


def load_instance(path: Union[str, Path]) -> DcopInstance:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InstanceParseError(f"cannot read {path}: {e}") from e
    return deserialize(text)
