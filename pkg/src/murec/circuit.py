"""Static circuit model: neurons, synapses, native gadgets, ports, injections.

A circuit is a directed graph over one dense id space shared by neurons and
native gadget nodes.  Neurons carry an integer threshold and a leak (a whole
number of timesteps, or :data:`INFINITE` to hold state until the next event).
Synapses carry an integer weight and a whole-number delay; total transit time
for a spike is ``delay + 1``.  Ports name nodes used for external input or
output, and the injection plan lists externally supplied values a run needs.

Circuits are immutable after construction and serialize to a canonical JSON
form (stable key order, sorted records) so that equal circuits produce
byte-equal text.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Union

from .errors import (
    DuplicatePortName,
    DuplicateSynapse,
    InvalidCircuit,
    ParseError,
    UnknownNeuron,
)

#: Leak value meaning "retain state until the next integration or spike".
INFINITE: None = None


@dataclass(frozen=True)
class NeuronSpec:
    id: int
    threshold: int
    leak: int | None  # whole number of steps, or INFINITE (None)


@dataclass(frozen=True)
class SynapseSpec:
    pre: int
    post: int
    weight: int
    delay: int


@dataclass(frozen=True)
class Port:
    name: str
    neuron: int
    role: str  # "input" | "output"


@dataclass(frozen=True)
class Injection:
    neuron: int
    value: int
    time: int


@dataclass(frozen=True)
class ConstEmit:
    """Native node that emits a fixed value one step after any delivery batch.

    Any incoming delivery at time ``t`` (whatever its value, including 0 and
    negatives) makes the node fire ``value`` at ``t + 1``; outgoing synapses
    then apply the usual weight/delay transit.
    """

    id: int
    value: int


@dataclass(frozen=True)
class Join:
    """Native node that synchronizes ``n`` lines.

    Line ``m`` buffers deliveries coming from node ``inputs[m]`` (same-batch
    deliveries sum; a later batch overwrites the parked value).  At the
    timestep the last empty line fills, every line emits its buffered value
    toward ``outputs[m]`` through the single (join, outputs[m]) synapse, and
    all buffers clear.
    """

    id: int
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]


NativeGadget = Union[ConstEmit, Join]


def _leak_to_json(leak: int | None) -> int | str:
    return "inf" if leak is None else leak


def _leak_from_json(raw: Any) -> int | None:
    if raw == "inf":
        return None
    if isinstance(raw, int) and not isinstance(raw, bool):
        return raw
    raise ParseError(f"leak must be a whole number or \"inf\", got {raw!r}")


@dataclass
class Circuit:
    """Immutable circuit; lists are normalized to canonical order on build."""

    neurons: list[NeuronSpec] = field(default_factory=list)
    synapses: list[SynapseSpec] = field(default_factory=list)
    ports: list[Port] = field(default_factory=list)
    injections: list[Injection] = field(default_factory=list)
    gadgets: list[NativeGadget] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.neurons = sorted(self.neurons, key=lambda n: n.id)
        self.synapses = sorted(self.synapses, key=lambda s: (s.pre, s.post))
        self.ports = sorted(self.ports, key=lambda p: p.name)
        self.injections = sorted(self.injections, key=lambda i: (i.time, i.neuron, i.value))
        self.gadgets = sorted(self.gadgets, key=lambda g: g.id)

    # -- lookups ---------------------------------------------------------

    def node_ids(self) -> set[int]:
        return {n.id for n in self.neurons} | {g.id for g in self.gadgets}

    def neuron_map(self) -> dict[int, NeuronSpec]:
        return {n.id: n for n in self.neurons}

    def gadget_map(self) -> dict[int, NativeGadget]:
        return {g.id: g for g in self.gadgets}

    def port(self, name: str) -> Port | None:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    def ports_by_role(self, role: str) -> list[Port]:
        return [p for p in self.ports if p.role == role]

    # -- validation ------------------------------------------------------

    def validate(self) -> list[str]:
        """Check every structural invariant; return violations (empty = ok)."""
        violations: list[str] = []
        ids = sorted({n.id for n in self.neurons} | {g.id for g in self.gadgets})
        total = len(self.neurons) + len(self.gadgets)
        if len(ids) != total:
            violations.append("node ids are not unique across neurons and gadgets")
        if ids and (ids[0] != 0 or ids[-1] != len(ids) - 1):
            violations.append("node ids are not contiguous from 0")
        known = set(ids)

        for n in self.neurons:
            if n.leak is not None and n.leak < 0:
                violations.append(f"neuron {n.id}: leak must be >= 0 or INFINITE")

        seen_pairs: set[tuple[int, int]] = set()
        for s in self.synapses:
            if s.pre not in known or s.post not in known:
                violations.append(f"synapse ({s.pre}, {s.post}): unknown endpoint")
            if s.delay < 0:
                violations.append(f"synapse ({s.pre}, {s.post}): delay must be >= 0")
            if (s.pre, s.post) in seen_pairs:
                violations.append(f"synapse ({s.pre}, {s.post}): duplicate (pre, post) pair")
            seen_pairs.add((s.pre, s.post))

        seen_names: set[str] = set()
        for p in self.ports:
            if p.name in seen_names:
                violations.append(f"port {p.name!r}: duplicate name")
            seen_names.add(p.name)
            if p.neuron not in known:
                violations.append(f"port {p.name!r}: unknown node {p.neuron}")
            if p.role not in ("input", "output"):
                violations.append(f"port {p.name!r}: role must be input or output")

        joins = {g.id: g for g in self.gadgets if isinstance(g, Join)}
        for inj in self.injections:
            if inj.neuron not in known:
                violations.append(f"injection into unknown node {inj.neuron}")
            if inj.time < 0:
                violations.append(f"injection into {inj.neuron}: time must be >= 0")
            if inj.neuron in joins:
                violations.append(f"injection into join {inj.neuron} is not allowed")

        for g in joins.values():
            n = len(g.inputs)
            if n < 2:
                violations.append(f"join {g.id}: needs at least 2 lines")
            if len(g.outputs) != n:
                violations.append(f"join {g.id}: inputs and outputs must have equal length")
            if len(set(g.inputs)) != len(g.inputs):
                violations.append(f"join {g.id}: input lines must be distinct")
            if len(set(g.outputs)) != len(g.outputs):
                violations.append(f"join {g.id}: output lines must be distinct")
            if g.id in g.inputs or g.id in g.outputs:
                violations.append(f"join {g.id}: may not be its own line endpoint")
            for node in (*g.inputs, *g.outputs):
                if node not in known:
                    violations.append(f"join {g.id}: unknown line endpoint {node}")
            in_pairs = {(s.pre, s.post) for s in self.synapses if s.post == g.id}
            out_pairs = {(s.pre, s.post) for s in self.synapses if s.pre == g.id}
            for src in g.inputs:
                if (src, g.id) not in in_pairs:
                    violations.append(f"join {g.id}: line source {src} has no synapse")
            for pre, _ in in_pairs:
                if pre not in g.inputs:
                    violations.append(f"join {g.id}: synapse from unlisted source {pre}")
            for dst in g.outputs:
                if (g.id, dst) not in out_pairs:
                    violations.append(f"join {g.id}: line target {dst} has no synapse")
            for _, post in out_pairs:
                if post not in g.outputs:
                    violations.append(f"join {g.id}: synapse to unlisted target {post}")

        return violations

    # -- serialization ---------------------------------------------------

    def serialize(self) -> str:
        """Render canonical JSON text (stable order, byte-reproducible)."""
        doc = {
            "neurons": [
                {"id": n.id, "threshold": n.threshold, "leak": _leak_to_json(n.leak)}
                for n in sorted(self.neurons, key=lambda n: n.id)
            ],
            "synapses": [
                {"pre": s.pre, "post": s.post, "weight": s.weight, "delay": s.delay}
                for s in sorted(self.synapses, key=lambda s: (s.pre, s.post))
            ],
            "ports": [
                {"name": p.name, "neuron": p.neuron, "role": p.role}
                for p in sorted(self.ports, key=lambda p: p.name)
            ],
            "injections": [
                {"neuron": i.neuron, "value": i.value, "time": i.time}
                for i in sorted(self.injections, key=lambda i: (i.time, i.neuron, i.value))
            ],
            "gadgets": [_gadget_to_json(g) for g in sorted(self.gadgets, key=lambda g: g.id)],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def deserialize(cls, text: str) -> "Circuit":
        doc = parse_json_document(text)
        return circuit_from_document(doc)


def _gadget_to_json(g: NativeGadget) -> dict[str, Any]:
    if isinstance(g, ConstEmit):
        return {"id": g.id, "kind": "const_emit", "k": g.value}
    return {
        "id": g.id,
        "kind": "join",
        "n": len(g.inputs),
        "inputs": list(g.inputs),
        "outputs": list(g.outputs),
    }


def parse_json_document(text: str) -> dict[str, Any]:
    """Parse JSON text, mapping syntax errors to ParseError with position."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("circuit document must be a JSON object")
    return doc


def _require_int(obj: dict[str, Any], key: str, where: str) -> int:
    value = obj.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"{where}: field {key!r} must be an integer, got {value!r}")
    return value


def _section(doc: dict[str, Any], key: str) -> list[dict[str, Any]]:
    raw = doc.get(key, [])
    if not isinstance(raw, list):
        raise ParseError(f"section {key!r} must be an array")
    for item in raw:
        if not isinstance(item, dict):
            raise ParseError(f"section {key!r} entries must be objects")
    return raw


def circuit_from_document(doc: dict[str, Any]) -> Circuit:
    """Build a Circuit from a parsed JSON document (schema errors -> ParseError).

    Absent sections default to empty; structural soundness (id density, join
    line contracts) is checked separately by :meth:`Circuit.validate`.
    """
    neurons = []
    for raw in _section(doc, "neurons"):
        neurons.append(
            NeuronSpec(
                id=_require_int(raw, "id", "neuron"),
                threshold=_require_int(raw, "threshold", "neuron"),
                leak=_leak_from_json(raw.get("leak", 0)),
            )
        )
    synapses = []
    for raw in _section(doc, "synapses"):
        synapses.append(
            SynapseSpec(
                pre=_require_int(raw, "pre", "synapse"),
                post=_require_int(raw, "post", "synapse"),
                weight=_require_int(raw, "weight", "synapse"),
                delay=_require_int(raw, "delay", "synapse"),
            )
        )
    ports = []
    for raw in _section(doc, "ports"):
        name = raw.get("name")
        role = raw.get("role")
        if not isinstance(name, str) or not name:
            raise ParseError(f"port: name must be a nonempty string, got {name!r}")
        if role not in ("input", "output"):
            raise ParseError(f"port {name!r}: role must be \"input\" or \"output\"")
        ports.append(Port(name=name, neuron=_require_int(raw, "neuron", "port"), role=role))
    injections = []
    for raw in _section(doc, "injections"):
        injections.append(
            Injection(
                neuron=_require_int(raw, "neuron", "injection"),
                value=_require_int(raw, "value", "injection"),
                time=_require_int(raw, "time", "injection"),
            )
        )
    gadgets: list[NativeGadget] = []
    for raw in _section(doc, "gadgets"):
        kind = raw.get("kind")
        if kind == "const_emit":
            gadgets.append(ConstEmit(id=_require_int(raw, "id", "gadget"), value=_require_int(raw, "k", "gadget")))
        elif kind == "join":
            inputs = raw.get("inputs")
            outputs = raw.get("outputs")
            if not isinstance(inputs, list) or not isinstance(outputs, list):
                raise ParseError("join gadget: inputs and outputs must be arrays")
            for x in (*inputs, *outputs):
                if not isinstance(x, int) or isinstance(x, bool):
                    raise ParseError(f"join gadget: line endpoints must be integers, got {x!r}")
            gadgets.append(
                Join(
                    id=_require_int(raw, "id", "gadget"),
                    inputs=tuple(inputs),
                    outputs=tuple(outputs),
                )
            )
        else:
            raise ParseError(f"unknown gadget kind {kind!r}")
    return Circuit(neurons=neurons, synapses=synapses, ports=ports, injections=injections, gadgets=gadgets)


class CircuitBuilder:
    """Mutable constructor allocating one dense id space for all nodes."""

    def __init__(self) -> None:
        self._neurons: list[NeuronSpec] = []
        self._gadgets: list[NativeGadget] = []
        self._synapses: dict[tuple[int, int], SynapseSpec] = {}
        self._ports: dict[str, Port] = {}
        self._injections: list[Injection] = []
        self._next_id = 0
        self.tallies: dict[str, int] = {}

    # -- nodes -----------------------------------------------------------

    def _alloc(self) -> int:
        nid = self._next_id
        self._next_id += 1
        return nid

    def add_neuron(self, threshold: int, leak: int | None = 0) -> int:
        if leak is not None and leak < 0:
            raise ValueError("leak must be >= 0 or INFINITE")
        nid = self._alloc()
        self._neurons.append(NeuronSpec(id=nid, threshold=threshold, leak=leak))
        return nid

    def add_const_emit(self, value: int) -> int:
        nid = self._alloc()
        self._gadgets.append(ConstEmit(id=nid, value=value))
        return nid

    def add_join(self, inputs: Iterable[int], outputs: Iterable[int]) -> int:
        ins = tuple(inputs)
        outs = tuple(outputs)
        if len(ins) < 2 or len(outs) != len(ins):
            raise ValueError("join needs n >= 2 input lines and as many outputs")
        for node in (*ins, *outs):
            self._check_node(node)
        if len(set(ins)) != len(ins) or len(set(outs)) != len(outs):
            raise ValueError("join line endpoints must be distinct")
        nid = self._alloc()
        self._gadgets.append(Join(id=nid, inputs=ins, outputs=outs))
        # Line synapses are part of the join contract: unit weight, no delay.
        for src in ins:
            self.add_synapse(src, nid, 1, 0)
        for dst in outs:
            self.add_synapse(nid, dst, 1, 0)
        return nid

    def _check_node(self, nid: int) -> None:
        if not (0 <= nid < self._next_id):
            raise UnknownNeuron(f"node {nid} does not exist")

    # -- edges, ports, plan ------------------------------------------------

    def add_synapse(self, pre: int, post: int, weight: int, delay: int = 0) -> tuple[int, int]:
        self._check_node(pre)
        self._check_node(post)
        if delay < 0:
            raise ValueError("delay must be >= 0")
        key = (pre, post)
        if key in self._synapses:
            raise DuplicateSynapse(f"synapse {key} already exists")
        self._synapses[key] = SynapseSpec(pre=pre, post=post, weight=weight, delay=delay)
        return key

    def mark_port(self, neuron: int, role: str, name: str) -> None:
        self._check_node(neuron)
        if role not in ("input", "output"):
            raise ValueError("port role must be \"input\" or \"output\"")
        if name in self._ports:
            raise DuplicatePortName(f"port {name!r} already exists")
        self._ports[name] = Port(name=name, neuron=neuron, role=role)

    def add_injection(self, neuron: int, value: int, time: int) -> None:
        self._check_node(neuron)
        if time < 0:
            raise ValueError("injection time must be >= 0")
        self._injections.append(Injection(neuron=neuron, value=value, time=time))

    def tally(self, key: str, count: int = 1) -> None:
        self.tallies[key] = self.tallies.get(key, 0) + count

    # -- finish ------------------------------------------------------------

    def build(self) -> Circuit:
        circuit = Circuit(
            neurons=list(self._neurons),
            synapses=list(self._synapses.values()),
            ports=list(self._ports.values()),
            injections=list(self._injections),
            gadgets=list(self._gadgets),
        )
        violations = circuit.validate()
        if violations:
            raise InvalidCircuit(violations)
        return circuit
