"""Lowering from function expressions to spiking circuits.

Each expression becomes a wired box: input neurons that accept one delivery
per argument and an output neuron that spikes the function value exactly once
per activation.  Constant, successor, and projection boxes are primitive
(fixed latency); composition aligns operand boxes by delay padding when their
latencies are known and by a join gadget otherwise; primitive recursion and
minimization compile to event-driven loops built on trigger-cell memory, so
their latency is input-dependent.

The compiled artifact bundles the circuit with a ``meta`` block: port names,
latency, counts, the big-M separation constant, and marker node ids that let
tests observe loop internals (iteration checks, store/erase/trigger ordering).
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Union

from .circuit import (
    INFINITE,
    Circuit,
    CircuitBuilder,
    Injection,
    circuit_from_document,
)
from .engine import RunOutcome, SimConfig, SpikeEvent, port_spikes, simulate
from .errors import (
    ArityError,
    ConfigError,
    ParseError,
    StrictModeViolation,
    UnboundPort,
    UnknownPort,
)
from .expr import (
    Compose,
    Const,
    FuelExhausted,
    Mu,
    PrimRec,
    Proj,
    RecExpr,
    Succ,
    Value,
    arity,
    check_arity,
    eval_oracle,
    to_sexpr,
)
from .gadgets import (
    Box,
    build_constant,
    build_projection,
    build_successor,
    build_trigger_cell,
)

DEFAULT_BIG_M = 1_000_000_000
DEFAULT_MAX_ARG = 1_000_000

_CONVENTIONS = {
    "relay": "threshold 0, leak 0, unit-weight synapses for plain value routing",
    "zero_test": "threshold 0 fed by weight -1: spikes iff the tested natural is 0",
    "nonzero_test": "threshold 1 fed by weight +1: spikes iff the tested natural is >= 1",
}


@dataclass(frozen=True)
class LoweringConfig:
    big_m: int = DEFAULT_BIG_M
    max_arg_magnitude: int = DEFAULT_MAX_ARG
    strict_primitive: bool = False


@dataclass
class _Lowering:
    b: CircuitBuilder
    cfg: LoweringConfig
    instances: list[dict[str, Any]] = field(default_factory=list)


def _relay(b: CircuitBuilder) -> int:
    return b.add_neuron(0, 0)


# -- lowering ----------------------------------------------------------------


def lower_expr(low: _Lowering, expr: RecExpr, ctx: int | None) -> Box:
    """Lower one expression; ``ctx`` is the known input-arrival time, if any."""
    if isinstance(expr, Const):
        return build_constant(low.b, expr.value, expr.arity, at=ctx)
    if isinstance(expr, Succ):
        return build_successor(low.b, at=ctx)
    if isinstance(expr, Proj):
        return build_projection(low.b, expr.index, expr.arity, low.cfg.big_m, at=ctx)
    if isinstance(expr, Compose):
        return _lower_compose(low, expr, ctx)
    if isinstance(expr, PrimRec):
        return _lower_primrec(low, expr)
    if isinstance(expr, Mu):
        return _lower_mu(low, expr)
    raise TypeError(f"not an expression: {expr!r}")


def _lower_compose(low: _Lowering, expr: Compose, ctx: int | None) -> Box:
    b = low.b
    n_args = arity(expr)
    fans = [_relay(b) for _ in range(max(n_args, 1))]
    child_ctx = None if ctx is None else ctx + 1
    g_boxes = [lower_expr(low, g, child_ctx) for g in expr.inner]
    for g_box in g_boxes:
        for fan, node in zip(fans, g_box.inputs):
            b.add_synapse(fan, node, 1, 0)

    gap = max(g_box.min_reuse_gap for g_box in g_boxes)
    if all(g_box.latency is not None for g_box in g_boxes):
        # Known operand latencies: pad the faster lanes with extra delay so
        # every operand value lands on the head box in the same timestep.
        lmax = max(g_box.latency for g_box in g_boxes)
        h_ctx = None if child_ctx is None else child_ctx + lmax + 1
        h_box = lower_expr(low, expr.outer, h_ctx)
        for g_box, node in zip(g_boxes, h_box.inputs):
            b.add_synapse(g_box.output, node, 1, lmax - g_box.latency)
        latency = None if h_box.latency is None else lmax + 2 + h_box.latency
    else:
        # At least one operand finishes at an input-dependent time: a join
        # parks early arrivals and releases the batch when the last one lands.
        h_box = lower_expr(low, expr.outer, None)
        if len(g_boxes) == 1:
            b.add_synapse(g_boxes[0].output, h_box.inputs[0], 1, 0)
        else:
            b.add_join([g_box.output for g_box in g_boxes], list(h_box.inputs))
        latency = None
    return Box(
        inputs=fans,
        output=h_box.output,
        latency=latency,
        min_reuse_gap=max(gap, h_box.min_reuse_gap),
    )


def _lower_primrec(low: _Lowering, expr: PrimRec) -> Box:
    """Event-driven loop computing f(i, xs) = h(i-1, ... h(1, h(0, g(xs), xs), xs) ...).

    One round per counter value n = 0..i.  A comparator spikes c = i - n each
    round; c >= 1 routes the round's accumulator into the step box, c = 0
    releases it as the result.  The accumulator candidate is stored in *two*
    trigger cells (return and continue); AND-gates fed by the readiness pulse
    plus the comparator verdict fire exactly one of them, the fired branch
    erases the other cell's copy, and a cross-cancel emitter clears the losing
    gate's partial charge, leaving every cell and gate at rest for reuse.
    """
    b = low.b
    big_m = low.cfg.big_m
    n_xs = arity(expr.base)

    in_i = _relay(b)
    in_xs = [_relay(b) for _ in range(n_xs)]
    # Round-zero seeds: the i-input's spike derives counter 0 and flag 0.
    seed = b.add_const_emit(0)
    c_i = _relay(b)
    c_n = _relay(b)
    c_flag = _relay(b)
    c_xs = [_relay(b) for _ in range(n_xs)]
    check = _relay(b)
    done = _relay(b)  # spikes (value 0) iff check == 0
    more = b.add_neuron(1, 0)  # spikes (value check) iff check >= 1
    ce_done = b.add_const_emit(1)
    ce_more = b.add_const_emit(1)
    ce_ready = b.add_const_emit(1)
    gate_ret = b.add_neuron(2, INFINITE)
    gate_loop = b.add_neuron(2, INFINITE)
    cancel_ret = b.add_const_emit(-1)
    cancel_loop = b.add_const_emit(-1)
    ret = build_trigger_cell(b, big_m)
    loop = build_trigger_cell(b, big_m)
    ret_fire = b.add_const_emit(big_m)
    loop_fire = b.add_const_emit(big_m)
    f_ready = _relay(b)
    bump = _relay(b)  # n + flag: the next round's counter
    one_line = b.add_const_emit(1)  # the flag is 1 from round one onward
    go_sink = _relay(b)
    out = _relay(b)

    g_box = lower_expr(low, expr.base, None)
    h_box = lower_expr(low, expr.step, None)

    # Seeding: carriers all fire three steps after the inputs arrive.
    b.add_synapse(in_i, seed, 1, 0)
    b.add_synapse(seed, c_n, 1, 0)
    b.add_synapse(seed, c_flag, 1, 0)
    b.add_synapse(in_i, c_i, 1, 2)
    for src, dst in zip(in_xs, c_xs):
        b.add_synapse(src, dst, 1, 2)

    # Comparator: check = i - n - flag, always >= 0 while the loop lives.
    b.add_synapse(c_i, check, 1, 0)
    b.add_synapse(c_n, check, -1, 0)
    b.add_synapse(c_flag, check, -1, 0)
    b.add_synapse(check, done, -1, 0)
    b.add_synapse(check, more, 1, 0)
    b.add_synapse(done, ce_done, 1, 0)
    b.add_synapse(more, ce_more, 1, 0)
    b.add_synapse(ce_done, gate_ret, 1, 0)
    b.add_synapse(ce_more, gate_loop, 1, 0)
    b.add_synapse(ce_ready, gate_ret, 1, 0)
    b.add_synapse(ce_ready, gate_loop, 1, 0)

    # Verdict: exactly one gate reaches 2; the winner clears the loser.
    b.add_synapse(gate_ret, ret_fire, 1, 0)
    b.add_synapse(gate_ret, cancel_loop, 1, 0)
    b.add_synapse(cancel_loop, gate_loop, 1, 0)
    b.add_synapse(gate_loop, loop_fire, 1, 0)
    b.add_synapse(gate_loop, cancel_ret, 1, 0)
    b.add_synapse(cancel_ret, gate_ret, 1, 0)
    b.add_synapse(ret_fire, ret.store, 1, 0)
    b.add_synapse(loop_fire, loop.store, 1, 0)

    # Accumulator plumbing: each candidate is stored in both cells; the
    # branch that fires erases the other cell's copy.
    b.add_synapse(g_box.output, f_ready, 1, 0)
    b.add_synapse(h_box.output, f_ready, 1, 0)
    b.add_synapse(f_ready, ret.store, 1, 0)
    b.add_synapse(f_ready, loop.store, 1, 0)
    b.add_synapse(f_ready, ce_ready, 1, 0)
    b.add_synapse(ret.out, out, 1, 0)
    b.add_synapse(ret.out, loop.store, -1, 0)
    b.add_synapse(loop.out, ret.store, -1, 0)

    # Counter bump and the constant-1 flag for the next round.
    b.add_synapse(c_n, bump, 1, 0)
    b.add_synapse(c_flag, bump, 1, 0)
    b.add_synapse(c_flag, one_line, 1, 0)

    # Base-case inputs come straight off the argument relays (the i-input
    # doubles as the activation pulse when there are no arguments).
    if n_xs == 0:
        b.add_synapse(in_i, g_box.inputs[0], 1, 0)
    else:
        for src, dst in zip(in_xs, g_box.inputs):
            b.add_synapse(src, dst, 1, 0)

    # The state join recirculates the carriers once the continue gate fires;
    # the step join releases (n, accumulator, xs) once the accumulator lands.
    state_join = b.add_join(
        [c_i, bump, one_line, *c_xs, gate_loop],
        [c_i, c_n, c_flag, *c_xs, go_sink],
    )
    h_join = b.add_join([c_n, loop.out, *c_xs], list(h_box.inputs))

    markers = {
        "kind": "primrec",
        "check": check,
        "h_out": h_box.output,
        "store_src": f_ready,
        "cont_out": loop.out,
        "ret_fire": ret_fire,
        "ret_store": ret.store,
        "ret_out": ret.out,
        "y_out": out,
        "gate_ret": gate_ret,
        "gate_loop": gate_loop,
        "state_join": state_join,
        "h_join": h_join,
    }
    low.instances.append(markers)
    return Box(inputs=[in_i, *in_xs], output=out, latency=None, markers=markers)


def _lower_mu(low: _Lowering, expr: Mu) -> Box:
    """Event-driven search for the least z >= 1 with f(z, xs) = 0.

    The counter carrier stores each candidate z into both trigger cells, the
    probe relay forwards f's value to a zero/nonzero detector pair (mutually
    exclusive by construction), and whichever detector spikes triggers its
    cell: zero releases z as the result, nonzero recirculates z through a
    successor stage into the next round and erases the return copy.
    """
    b = low.b
    big_m = low.cfg.big_m
    n_xs = arity(expr)

    ins = [_relay(b) for _ in range(max(n_xs, 1))]
    seed_z = b.add_const_emit(1)
    c_z = _relay(b)
    c_xs = [_relay(b) for _ in range(n_xs)]
    probe = _relay(b)
    is_zero = _relay(b)
    not_zero = b.add_neuron(1, 0)
    ret = build_trigger_cell(b, big_m)
    loop = build_trigger_cell(b, big_m)
    ret_fire = b.add_const_emit(big_m)
    loop_fire = b.add_const_emit(big_m)
    succ_out = _relay(b)
    ce_one = b.add_const_emit(1)
    out = _relay(b)

    f_box = lower_expr(low, expr.body, None)

    # Seeding: z = 1 and the argument copies fire three steps after arrival.
    for node in ins:
        b.add_synapse(node, seed_z, 1, 0)
    b.add_synapse(seed_z, c_z, 1, 0)
    for src, dst in zip(ins if n_xs else [], c_xs):
        b.add_synapse(src, dst, 1, 2)

    # Probe: carriers feed the body directly (they fire in lockstep).
    b.add_synapse(c_z, f_box.inputs[0], 1, 0)
    for src, dst in zip(c_xs, f_box.inputs[1:]):
        b.add_synapse(src, dst, 1, 0)
    b.add_synapse(f_box.output, probe, 1, 0)
    b.add_synapse(probe, is_zero, -1, 0)
    b.add_synapse(probe, not_zero, 1, 0)
    b.add_synapse(is_zero, ret_fire, 1, 0)
    b.add_synapse(not_zero, loop_fire, 1, 0)
    b.add_synapse(ret_fire, ret.store, 1, 0)
    b.add_synapse(loop_fire, loop.store, 1, 0)

    # Candidate bookkeeping: store z in both cells, fired branch erases the
    # other copy; the continue branch increments z for the next round.
    b.add_synapse(c_z, ret.store, 1, 0)
    b.add_synapse(c_z, loop.store, 1, 0)
    b.add_synapse(ret.out, out, 1, 0)
    b.add_synapse(ret.out, loop.store, -1, 0)
    b.add_synapse(loop.out, ret.store, -1, 0)
    b.add_synapse(loop.out, succ_out, 1, 2)
    b.add_synapse(loop.out, ce_one, 1, 0)
    b.add_synapse(ce_one, succ_out, 1, 0)

    if n_xs == 0:
        b.add_synapse(succ_out, c_z, 1, 0)
        state_join = None
    else:
        state_join = b.add_join([succ_out, *c_xs], [c_z, *c_xs])

    markers = {
        "kind": "mu",
        "probe": probe,
        "zero_det": is_zero,
        "nonzero_det": not_zero,
        "f_out": f_box.output,
        "store_src": c_z,
        "cont_out": loop.out,
        "ret_fire": ret_fire,
        "ret_store": ret.store,
        "ret_out": ret.out,
        "y_out": out,
        "succ_out": succ_out,
    }
    if state_join is not None:
        markers["state_join"] = state_join
    low.instances.append(markers)
    return Box(inputs=ins, output=out, latency=None, markers=markers)


# -- compiled programs -------------------------------------------------------


@dataclass
class CompiledProgram:
    circuit: Circuit
    meta: dict[str, Any]

    def to_document(self) -> dict[str, Any]:
        # A document is a detached snapshot: mutating it must not reach back
        # into the program (and vice versa).
        return {"circuit": json.loads(self.circuit.serialize()), "meta": copy.deepcopy(self.meta)}

    def serialize(self) -> str:
        return json.dumps(self.to_document(), indent=2) + "\n"

    @classmethod
    def from_document(cls, doc: Any) -> "CompiledProgram":
        if not isinstance(doc, dict) or "circuit" not in doc or "meta" not in doc:
            raise ParseError("compiled program document needs circuit and meta blocks")
        if not isinstance(doc["circuit"], dict):
            raise ParseError("circuit block must be an object")
        meta = doc["meta"]
        if not isinstance(meta, dict):
            raise ParseError("meta block must be an object")
        ports = meta.get("ports")
        if not isinstance(ports, dict) or "inputs" not in ports or "output" not in ports:
            raise ParseError("meta.ports must list inputs and output")
        if not isinstance(meta.get("big_m"), int):
            raise ParseError("meta.big_m must be an integer")
        return cls(circuit=circuit_from_document(doc["circuit"]), meta=meta)

    @classmethod
    def deserialize(cls, text: str) -> "CompiledProgram":
        from .circuit import parse_json_document

        return cls.from_document(parse_json_document(text))


def _reject_non_primitive(expr: RecExpr) -> None:
    if isinstance(expr, (PrimRec, Mu)):
        raise StrictModeViolation(
            f"strict primitive mode forbids {type(expr).__name__.lower()} constructions"
        )
    if isinstance(expr, Proj):
        raise StrictModeViolation(
            "strict primitive mode forbids projections (their lane release needs emitter gadgets)"
        )
    if isinstance(expr, Compose):
        _reject_non_primitive(expr.outer)
        for g in expr.inner:
            _reject_non_primitive(g)


def compile_program(expr: RecExpr, config: LoweringConfig | None = None) -> CompiledProgram:
    cfg = config or LoweringConfig()
    n_args = check_arity(expr)
    if cfg.big_m <= 2 * cfg.max_arg_magnitude:
        raise ConfigError(
            f"big_m={cfg.big_m} must exceed twice the argument bound {cfg.max_arg_magnitude}"
        )
    if cfg.strict_primitive:
        _reject_non_primitive(expr)

    low = _Lowering(b=CircuitBuilder(), cfg=cfg)
    box = lower_expr(low, expr, 0)

    if n_args == 0:
        input_names: list[str] = []
        dummy_names = ["x1"]
    elif isinstance(expr, PrimRec):
        input_names = ["i"] + [f"x{j}" for j in range(1, n_args)]
        dummy_names = []
    else:
        input_names = [f"x{j}" for j in range(1, n_args + 1)]
        dummy_names = []
    for name, node in zip(input_names or dummy_names, box.inputs):
        low.b.mark_port(node, "input", name)
    low.b.mark_port(box.output, "output", "y")

    circuit = low.b.build()
    meta = {
        "ports": {"inputs": input_names, "output": "y", "dummy": dummy_names},
        "arity": n_args,
        "latency": box.latency,
        "min_reuse_gap": box.min_reuse_gap,
        "stats": {
            "neurons": len(circuit.neurons),
            "synapses": len(circuit.synapses),
            "native_gadgets": len(circuit.gadgets),
            "trigger_cells": low.b.tallies.get("trigger_cells", 0),
            "static_latency": box.latency,
        },
        "big_m": cfg.big_m,
        "markers": dict(box.markers),
        "instances": list(low.instances),
        "conventions": dict(_CONVENTIONS),
    }
    return CompiledProgram(circuit=circuit, meta=meta)


# -- running compiled programs ----------------------------------------------


@dataclass
class ProgramRun:
    status: str  # "ok" | "no_output" | "multi_output" | "timeout" | "fault"
    value: int | None
    y_spikes: list[SpikeEvent]
    outcome: RunOutcome


def bind_args(
    program: CompiledProgram, args: Union[list[int], tuple[int, ...], dict[str, int]]
) -> dict[str, int]:
    """Resolve positional or named arguments to a full port->value binding."""
    inputs = list(program.meta["ports"]["inputs"])
    dummy = list(program.meta["ports"].get("dummy", []))
    if isinstance(args, dict):
        unknown = set(args) - set(inputs)
        if unknown:
            raise UnknownPort(f"unknown input port(s): {', '.join(sorted(unknown))}")
        missing = set(inputs) - set(args)
        if missing:
            raise UnboundPort(f"unbound input port(s): {', '.join(sorted(missing))}")
        binding = {name: args[name] for name in inputs}
    else:
        values = list(args)
        if len(values) != len(inputs):
            raise ArityError(f"expected {len(inputs)} arguments, got {len(values)}")
        binding = dict(zip(inputs, values))
    for name in dummy:
        binding[name] = 0
    return binding


def run_program(
    program: CompiledProgram,
    args: Union[list[int], tuple[int, ...], dict[str, int]],
    max_steps: int = 1_000_000,
    trace: bool = False,
    big_m: int | None = None,
) -> ProgramRun:
    binding = bind_args(program, args)
    eff_big_m = big_m if big_m is not None else program.meta["big_m"]
    for name, value in binding.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"argument {name} must be an integer, got {value!r}")
        if value < 0:
            raise ConfigError(f"argument {name} must be a natural, got {value}")
        if 2 * value >= eff_big_m:
            raise ConfigError(
                f"argument {name}={value} breaks the separation bound (must be < big_m/2)"
            )

    port_map = {p.name: p.neuron for p in program.circuit.ports}
    injections = tuple(
        Injection(neuron=port_map[name], value=value, time=0)
        for name, value in sorted(binding.items())
    )
    outcome = simulate(
        program.circuit,
        extra_injections=injections,
        config=SimConfig(max_steps=max_steps, big_m=eff_big_m, trace=trace),
    )
    y_name = program.meta["ports"]["output"]
    y_spikes = port_spikes(program.circuit, outcome.raster).get(y_name, [])
    if outcome.status == "fault":
        return ProgramRun("fault", None, y_spikes, outcome)
    if outcome.status == "timeout":
        return ProgramRun("timeout", None, y_spikes, outcome)
    if len(y_spikes) == 1:
        return ProgramRun("ok", y_spikes[0].value, y_spikes, outcome)
    return ProgramRun("no_output" if not y_spikes else "multi_output", None, y_spikes, outcome)


# -- differential testing ----------------------------------------------------


@dataclass
class DiffReport:
    cases: int
    mismatches: list[dict[str, Any]]
    timeouts: int
    seed: int | None = None

    @property
    def ok(self) -> bool:
        return not self.mismatches


def run_diff(
    expr: RecExpr,
    program: CompiledProgram,
    cases: list[tuple[int, ...]],
    fuel: int = 100_000,
    max_steps: int = 1_000_000,
) -> DiffReport:
    """Compare the fueled interpreter against the compiled circuit, case by case.

    Consistency: an interpreter value must match a clean single-spike run, and
    interpreter fuel exhaustion must match a circuit timeout.
    """
    text = to_sexpr(expr)
    mismatches: list[dict[str, Any]] = []
    timeouts = 0
    for case in cases:
        oracle = eval_oracle(expr, list(case), fuel=fuel)
        run = run_program(program, list(case), max_steps=max_steps)
        if run.status == "timeout":
            timeouts += 1
        expected: Any = oracle.value if isinstance(oracle, Value) else "fuel-exhausted"
        got: Any = run.value if run.status == "ok" else run.status
        consistent = (
            isinstance(oracle, Value) and run.status == "ok" and run.value == oracle.value
        ) or (isinstance(oracle, FuelExhausted) and run.status == "timeout")
        if not consistent:
            mismatches.append(
                {"expr": text, "args": list(case), "oracle": expected, "circuit": got}
            )
    return DiffReport(cases=len(cases), mismatches=mismatches, timeouts=timeouts)
