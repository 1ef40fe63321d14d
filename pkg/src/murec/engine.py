"""Deterministic discrete-time, event-driven execution of circuits.

Timestep semantics:

1. An injection ``(neuron, value, time)`` is a delivery of ``value`` at
   ``time``.  A spike of value ``s`` at time ``t`` on node ``i`` schedules,
   for each synapse ``(i, j)``, a delivery of ``weight * s`` at
   ``t + delay + 1``.
2. At time ``t`` every neuron with at least one arriving delivery integrates:
   ``v <- retained(t) + sum(delivered values)``.
3. A neuron spikes at ``t`` iff it integrated at ``t`` and ``v >= threshold``;
   the spike value is ``v`` and the state resets to 0.  No delivery, no spike.
4. A non-spiking integrated state is retained through ``t + leak`` and is 0
   from ``t + leak + 1`` on; INFINITE leak retains it until the next event.
5. Spikes on output-port nodes are recorded at the spike time itself
   (external taps add no transit).

Native gadget nodes run alongside neurons in the same id space: a constant
emitter fires its fixed value one step after any delivery batch; a join
buffers one value per source line and flushes all lines the moment the last
one fills.

Arithmetic is checked: values leaving the signed 63-bit range fault with
``overflow``; values reaching magnitude ``2 * big_m`` fault with
``magnitude_breach`` (the big-M separation is gone).
"""
from __future__ import annotations

import csv
import heapq
import io
import json
from dataclasses import dataclass

from .circuit import Circuit, ConstEmit, Join
from .errors import EmptyQueue, InvalidCircuit, UnknownNeuron

INT63_MAX = 2**62 - 1
INT63_MIN = -(2**62)


@dataclass(frozen=True)
class SpikeEvent:
    time: int
    neuron: int
    value: int


@dataclass(frozen=True)
class Delivery:
    time: int
    target: int
    source: int | None  # None for external injections
    value: int


@dataclass(frozen=True)
class Fault:
    kind: str  # "overflow" | "magnitude_breach"
    time: int
    node: int
    value: int


@dataclass(frozen=True)
class SimConfig:
    max_steps: int = 1_000_000
    big_m: int = 1_000_000_000
    trace: bool = False


@dataclass
class RunOutcome:
    status: str  # "quiescent" | "timeout" | "fault"
    final_clock: int
    raster: list[SpikeEvent]
    fault: Fault | None = None
    trace: list[Delivery] | None = None

    @property
    def quiescent(self) -> bool:
        return self.status == "quiescent"


class _FaultStop(Exception):
    """Internal control flow: a fault ended the run mid-step."""


class Engine:
    """Single-owner stepper over one circuit run."""

    def __init__(
        self,
        circuit: Circuit,
        config: SimConfig | None = None,
        extra_injections: tuple = (),
    ) -> None:
        violations = circuit.validate()
        if violations:
            raise InvalidCircuit(violations)
        self.circuit = circuit
        self.config = config or SimConfig()
        self.clock = 0
        self.fault: Fault | None = None
        self.raster: list[SpikeEvent] = []
        self.trace: list[Delivery] | None = [] if self.config.trace else None

        self._neurons = circuit.neuron_map()
        self._gadgets = circuit.gadget_map()
        self._out: dict[int, list[tuple[int, int, int]]] = {}
        for s in circuit.synapses:
            self._out.setdefault(s.pre, []).append((s.post, s.weight, s.delay))
        for lst in self._out.values():
            lst.sort()
        # join line bookkeeping: source id -> line index, plus per-target edge
        self._join_line_index: dict[int, dict[int, int]] = {}
        self._join_out_edge: dict[int, dict[int, tuple[int, int]]] = {}
        for g in circuit.gadgets:
            if isinstance(g, Join):
                self._join_line_index[g.id] = {src: m for m, src in enumerate(g.inputs)}
                self._join_out_edge[g.id] = {
                    post: (w, d) for (post, w, d) in self._out.get(g.id, [])
                }
        self._join_lines: dict[int, dict[int, int]] = {g.id: {} for g in circuit.gadgets if isinstance(g, Join)}

        self._retained: dict[int, tuple[int, int]] = {}  # neuron -> (value, set_time)
        self._deliveries: dict[int, dict[int, list[tuple[int | None, int]]]] = {}
        self._ce_fires: dict[int, set[int]] = {}
        self._heap: list[int] = []
        self._pending_times: set[int] = set()
        self._ran = False

        for inj in circuit.injections:
            self.add_injection(inj.neuron, inj.value, inj.time)
        for inj in extra_injections:
            self.add_injection(inj.neuron, inj.value, inj.time)

    # -- scheduling --------------------------------------------------------

    def _push_time(self, t: int) -> None:
        if t not in self._pending_times:
            self._pending_times.add(t)
            heapq.heappush(self._heap, t)

    def _schedule(self, t: int, target: int, source: int | None, value: int) -> None:
        self._deliveries.setdefault(t, {}).setdefault(target, []).append((source, value))
        self._push_time(t)

    def add_injection(self, neuron: int, value: int, time: int) -> None:
        if isinstance(self._gadgets.get(neuron), Join):
            raise InvalidCircuit([f"injection into join {neuron} is not allowed"])
        self._schedule(time, neuron, None, value)

    # -- inspection --------------------------------------------------------

    def peek_time(self) -> int | None:
        return self._heap[0] if self._heap else None

    def inspect(self, neuron: int, at: int | None = None) -> int:
        """Retained state of a neuron with leak accounted at time ``at``."""
        spec = self._neurons.get(neuron)
        if spec is None:
            raise UnknownNeuron(f"node {neuron} is not a neuron")
        stored = self._retained.get(neuron)
        if stored is None:
            return 0
        value, t_set = stored
        when = self.clock if at is None else at
        if spec.leak is None or when <= t_set + spec.leak:
            return value
        return 0

    def join_lines(self, join_id: int) -> dict[int, int]:
        """Currently buffered values of a join, keyed by line index."""
        return dict(self._join_lines[join_id])

    # -- faults ------------------------------------------------------------

    def _check(self, value: int, time: int, node: int) -> None:
        if value > INT63_MAX or value < INT63_MIN:
            self.fault = Fault("overflow", time, node, value)
            raise _FaultStop
        if abs(value) >= 2 * self.config.big_m:
            self.fault = Fault("magnitude_breach", time, node, value)
            raise _FaultStop

    # -- execution ---------------------------------------------------------

    def _emit(self, t: int, node: int, value: int) -> None:
        self.raster.append(SpikeEvent(time=t, neuron=node, value=value))
        for post, weight, delay in self._out.get(node, ()):
            product = weight * value
            self._check(product, t, post)
            self._schedule(t + delay + 1, post, node, product)

    def step(self) -> int:
        """Process the earliest pending timestep; return its time."""
        if not self._heap:
            raise EmptyQueue("no pending deliveries")
        t = heapq.heappop(self._heap)
        self._pending_times.discard(t)
        self.clock = t
        try:
            self._process(t)
        except _FaultStop:
            pass
        return t

    def _process(self, t: int) -> None:
        for gid in sorted(self._ce_fires.pop(t, ())):
            gadget = self._gadgets[gid]
            self.raster.append(SpikeEvent(time=t, neuron=gid, value=gadget.value))
            for post, weight, delay in self._out.get(gid, ()):
                product = weight * gadget.value
                self._check(product, t, post)
                self._schedule(t + delay + 1, post, gid, product)

        batch = self._deliveries.pop(t, {})
        for target in sorted(batch):
            arrivals = batch[target]
            if self.trace is not None:
                for source, value in arrivals:
                    self.trace.append(Delivery(time=t, target=target, source=source, value=value))
            gadget = self._gadgets.get(target)
            if gadget is None:
                self._integrate_neuron(t, target, arrivals)
            elif isinstance(gadget, ConstEmit):
                self._ce_fires.setdefault(t + 1, set()).add(target)
                self._push_time(t + 1)
            else:
                self._deliver_join(t, gadget, arrivals)

    def _integrate_neuron(self, t: int, nid: int, arrivals: list[tuple[int | None, int]]) -> None:
        spec = self._neurons[nid]
        base = 0
        stored = self._retained.get(nid)
        if stored is not None:
            value, t_set = stored
            if spec.leak is None or t <= t_set + spec.leak:
                base = value
        v = base
        for _, delivered in arrivals:
            v += delivered
        self._check(v, t, nid)
        if v >= spec.threshold:
            self._retained[nid] = (0, t)
            self._emit(t, nid, v)
        else:
            self._retained[nid] = (v, t)

    def _deliver_join(self, t: int, gadget: Join, arrivals: list[tuple[int | None, int]]) -> None:
        lines = self._join_lines[gadget.id]
        index = self._join_line_index[gadget.id]
        per_source: dict[int, int] = {}
        for source, value in arrivals:
            # validate() guarantees every arrival comes from a listed line
            per_source[index[source]] = per_source.get(index[source], 0) + value
        for line, value in per_source.items():
            self._check(value, t, gadget.id)
            lines[line] = value  # a fresh batch overwrites a parked value
        if len(lines) == len(gadget.inputs):
            for m in range(len(gadget.inputs)):
                value = lines[m]
                self.raster.append(SpikeEvent(time=t, neuron=gadget.id, value=value))
                weight, delay = self._join_out_edge[gadget.id][gadget.outputs[m]]
                product = weight * value
                self._check(product, t, gadget.outputs[m])
                self._schedule(t + delay + 1, gadget.outputs[m], gadget.id, product)
            lines.clear()

    def run(self) -> RunOutcome:
        """Run to quiescence, timeout, or fault."""
        last = 0
        while self._heap:
            next_time = self._heap[0]
            if next_time > self.config.max_steps:
                return self._finish("timeout", self.config.max_steps)
            last = self.step()
            if self.fault is not None:
                return self._finish("fault", last)
        return self._finish("quiescent", last)

    def _finish(self, status: str, final_clock: int) -> RunOutcome:
        self.raster.sort(key=lambda e: (e.time, e.neuron))
        trace = None
        if self.trace is not None:
            trace = sorted(self.trace, key=lambda d: (d.time, d.target))
        return RunOutcome(
            status=status,
            final_clock=final_clock,
            raster=list(self.raster),
            fault=self.fault,
            trace=trace,
        )


def simulate(
    circuit: Circuit,
    extra_injections: tuple = (),
    config: SimConfig | None = None,
) -> RunOutcome:
    """One-shot convenience wrapper around :class:`Engine`."""
    return Engine(circuit, config=config, extra_injections=tuple(extra_injections)).run()


def port_spikes(circuit: Circuit, raster: list[SpikeEvent], role: str = "output") -> dict[str, list[SpikeEvent]]:
    """Group raster events by port name for ports of the given role."""
    by_node: dict[int, list[str]] = {}
    for p in circuit.ports_by_role(role):
        by_node.setdefault(p.neuron, []).append(p.name)
    found: dict[str, list[SpikeEvent]] = {p.name: [] for p in circuit.ports_by_role(role)}
    for event in raster:
        for name in by_node.get(event.neuron, ()):
            found[name].append(event)
    return found


def _raster_rows(circuit: Circuit, raster: list[SpikeEvent]) -> list[tuple[int, int, int, str]]:
    """One row per spike, replicated per output port on the spiking node."""
    port_names: dict[int, list[str]] = {}
    for p in circuit.ports_by_role("output"):
        port_names.setdefault(p.neuron, []).append(p.name)
    for names in port_names.values():
        names.sort()
    rows = []
    for event in sorted(raster, key=lambda e: (e.time, e.neuron)):
        names = port_names.get(event.neuron)
        if names:
            for name in names:
                rows.append((event.time, event.neuron, event.value, name))
        else:
            rows.append((event.time, event.neuron, event.value, ""))
    return rows


def raster_csv(circuit: Circuit, raster: list[SpikeEvent]) -> str:
    """Render the raster as CSV with the stable header ``time,neuron,value,port``."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["time", "neuron", "value", "port"])
    for row in _raster_rows(circuit, raster):
        writer.writerow(row)
    return out.getvalue()


def raster_jsonl(circuit: Circuit, raster: list[SpikeEvent]) -> str:
    """Render the raster as JSON lines with the same fields as the CSV."""
    lines = []
    for time, neuron, value, port in _raster_rows(circuit, raster):
        lines.append(json.dumps({"time": time, "neuron": neuron, "value": value, "port": port}))
    return "\n".join(lines) + ("\n" if lines else "")
