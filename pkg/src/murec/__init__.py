"""Integer spiking circuits as a compilation target for recursive functions.

The package has three layers: a deterministic discrete-time event-driven
simulator for integer-valued spiking neurons (:mod:`murec.engine` over the
model in :mod:`murec.circuit`), a small library of hand-verified circuit
fragments (:mod:`murec.gadgets`), and a compiler (:mod:`murec.compiler`) that
lowers recursive function expressions (:mod:`murec.expr`) to circuits whose
single output spike carries the function value.  A fueled interpreter serves
as the ground truth for differential testing, wired up in :mod:`murec.cli`.
"""
from .circuit import (
    INFINITE,
    Circuit,
    CircuitBuilder,
    ConstEmit,
    Injection,
    Join,
    NeuronSpec,
    Port,
    SynapseSpec,
    circuit_from_document,
    parse_json_document,
)
from .compiler import (
    CompiledProgram,
    DiffReport,
    LoweringConfig,
    ProgramRun,
    bind_args,
    compile_program,
    lower_expr,
    run_diff,
    run_program,
)
from .engine import (
    INT63_MAX,
    INT63_MIN,
    Delivery,
    Engine,
    Fault,
    RunOutcome,
    SimConfig,
    SpikeEvent,
    port_spikes,
    raster_csv,
    raster_jsonl,
    simulate,
)
from .errors import (
    ArityError,
    CircuitError,
    ConfigError,
    DuplicatePortName,
    DuplicateSynapse,
    EmptyQueue,
    InvalidCircuit,
    MurecError,
    ParseError,
    StrictModeViolation,
    UnboundPort,
    UnknownNeuron,
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
    gen_expr,
    parse_program,
    to_sexpr,
)
from .gadgets import (
    Box,
    TriggerCell,
    build_constant,
    build_projection,
    build_successor,
    build_trigger_cell,
)

__version__ = "0.1.0"

__all__ = [
    "INFINITE",
    "INT63_MAX",
    "INT63_MIN",
    "ArityError",
    "Box",
    "Circuit",
    "CircuitBuilder",
    "CircuitError",
    "CompiledProgram",
    "Compose",
    "ConfigError",
    "Const",
    "ConstEmit",
    "Delivery",
    "DiffReport",
    "DuplicatePortName",
    "DuplicateSynapse",
    "EmptyQueue",
    "Engine",
    "Fault",
    "FuelExhausted",
    "Injection",
    "InvalidCircuit",
    "Join",
    "LoweringConfig",
    "Mu",
    "MurecError",
    "NeuronSpec",
    "ParseError",
    "Port",
    "PrimRec",
    "ProgramRun",
    "Proj",
    "RecExpr",
    "RunOutcome",
    "SimConfig",
    "SpikeEvent",
    "StrictModeViolation",
    "Succ",
    "SynapseSpec",
    "TriggerCell",
    "UnboundPort",
    "UnknownNeuron",
    "UnknownPort",
    "Value",
    "arity",
    "bind_args",
    "check_arity",
    "circuit_from_document",
    "compile_program",
    "eval_oracle",
    "gen_expr",
    "lower_expr",
    "parse_json_document",
    "parse_program",
    "port_spikes",
    "raster_csv",
    "raster_jsonl",
    "run_diff",
    "run_program",
    "simulate",
    "to_sexpr",
    "__version__",
]
