"""Command-line front end: compile, run, eval, and diff.

Exit codes: 0 success; 1 parse/arity errors; 2 configuration or strict-mode
errors; 3 timeout (or interpreter fuel exhaustion); 4 engine fault; 5
differential mismatches; 64 unknown or unbound input port.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import os
import random
import sys
from pathlib import Path

from .circuit import parse_json_document
from .compiler import (
    CompiledProgram,
    DiffReport,
    LoweringConfig,
    compile_program,
    run_diff,
    run_program,
)
from .engine import raster_csv, raster_jsonl
from .errors import (
    ArityError,
    ConfigError,
    InvalidCircuit,
    ParseError,
    StrictModeViolation,
    UnboundPort,
    UnknownPort,
)
from .expr import FuelExhausted, Value, check_arity, eval_oracle, gen_expr, parse_program

DEFAULT_BIG_M = 1_000_000_000
DEFAULT_FUEL = 100_000
DEFAULT_MAX_STEPS = 1_000_000


def _env_big_m() -> int:
    raw = os.environ.get("MUREC_BIG_M")
    if raw is None:
        return DEFAULT_BIG_M
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"MUREC_BIG_M must be an integer, got {raw!r}") from exc


def _latency_str(latency: int | None) -> str:
    return "dynamic" if latency is None else f"static({latency})"


def _natural(text: str, what: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise ConfigError(f"{what} must be an integer, got {text!r}") from exc
    if value < 0:
        raise ConfigError(f"{what} must be a natural, got {value}")
    return value


# -- compile -----------------------------------------------------------------


def _default_compile_out(program_path: Path) -> Path:
    if program_path.suffix == ".rec":
        return program_path.with_suffix(".circuit.json")
    return Path(str(program_path) + ".circuit.json")


def cmd_compile(ns: argparse.Namespace) -> int:
    expr = parse_program(Path(ns.program).read_text())
    cfg = LoweringConfig(
        big_m=ns.big_m,
        max_arg_magnitude=ns.max_arg,
        strict_primitive=ns.strict_primitive,
    )
    program = compile_program(expr, cfg)
    out = Path(ns.output) if ns.output else _default_compile_out(Path(ns.program))
    out.write_text(program.serialize())
    stats = program.meta["stats"]
    print(f"wrote {out}")
    print(
        "neurons={neurons} synapses={synapses} native_gadgets={native_gadgets} "
        "trigger_cells={trigger_cells}".format(**stats)
    )
    print(f"latency={_latency_str(program.meta['latency'])} big_m={program.meta['big_m']}")
    return 0


# -- run ---------------------------------------------------------------------


def _parse_bindings(pairs: list[str]) -> dict[str, int]:
    binding: dict[str, int] = {}
    for pair in pairs:
        name, sep, raw = pair.partition("=")
        if not sep or not name:
            raise ConfigError(f"--in expects name=value, got {pair!r}")
        binding[name] = _natural(raw, f"input {name}")
    return binding


def _default_raster_out(circuit_path: Path, fmt: str) -> Path:
    base = str(circuit_path)
    if base.endswith(".circuit.json"):
        base = base[: -len(".circuit.json")]
    elif circuit_path.suffix:
        base = str(circuit_path.with_suffix(""))
    return Path(f"{base}.raster.{'jsonl' if fmt == 'jsonl' else 'csv'}")


def _trace_csv(trace) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["time", "target", "source", "value"])
    for d in trace:
        writer.writerow([d.time, d.target, "" if d.source is None else d.source, d.value])
    return out.getvalue()


def cmd_run(ns: argparse.Namespace) -> int:
    program = CompiledProgram.from_document(parse_json_document(Path(ns.circuit).read_text()))
    binding = _parse_bindings(ns.inputs or [])
    run = run_program(program, binding, max_steps=ns.max_steps, trace=ns.trace is not None)

    raster_path = Path(ns.raster) if ns.raster else _default_raster_out(Path(ns.circuit), ns.format)
    render = raster_jsonl if ns.format == "jsonl" else raster_csv
    raster_path.write_text(render(program.circuit, run.outcome.raster))
    if ns.trace is not None:
        Path(ns.trace).write_text(_trace_csv(run.outcome.trace or []))

    outcome = run.outcome
    if run.status == "fault":
        fault = outcome.fault
        print(f"status=fault kind={fault.kind} node={fault.node} time={fault.time}")
        return 4
    if run.status == "timeout":
        print(f"status=timeout clock={outcome.final_clock}")
        return 3
    print(f"y={run.value if run.status == 'ok' else 'none'}")
    print(f"status={outcome.status} clock={outcome.final_clock}")
    return 0


# -- eval --------------------------------------------------------------------


def cmd_eval(ns: argparse.Namespace) -> int:
    expr = parse_program(Path(ns.program).read_text())
    args = []
    for raw in ns.args:
        try:
            value = int(raw)
        except ValueError as exc:
            raise ArityError(f"arguments must be naturals, got {raw!r}") from exc
        if value < 0:
            raise ArityError(f"arguments must be naturals, got {value}")
        args.append(value)
    result = eval_oracle(expr, args, fuel=ns.fuel)
    if isinstance(result, Value):
        print(result.value)
        return 0
    print("fuel-exhausted")
    return 3


# -- diff --------------------------------------------------------------------


def _parse_ranges(text: str, n_args: int) -> list[tuple[int, ...]]:
    parts = text.split(",") if text else []
    if len(parts) != n_args:
        raise ArityError(f"--args lists {len(parts)} ranges but the program takes {n_args}")
    axes: list[list[int]] = []
    for part in parts:
        lo, sep, hi = part.partition("..")
        if sep:
            start, stop = _natural(lo, "--args bound"), _natural(hi, "--args bound")
            if stop < start:
                raise ConfigError(f"empty range {part!r} in --args")
            axes.append(list(range(start, stop + 1)))
        else:
            axes.append([_natural(part, "--args value")])
    return [tuple(case) for case in itertools.product(*axes)]


def _print_report(report: DiffReport) -> None:
    seed = "none" if report.seed is None else report.seed
    print(
        f"cases={report.cases} mismatches={len(report.mismatches)} "
        f"timeouts={report.timeouts} seed={seed}"
    )
    for m in report.mismatches:
        print(
            f"MISMATCH expr={m['expr']} args={m['args']} "
            f"oracle={m['oracle']} circuit={m['circuit']}"
        )


def cmd_diff(ns: argparse.Namespace) -> int:
    cfg = LoweringConfig(big_m=ns.big_m, max_arg_magnitude=ns.max_arg)
    if ns.random is not None:
        rng = random.Random(ns.seed)
        total_cases = 0
        mismatches = []
        timeouts = 0
        for _ in range(ns.random):
            n_args = ns.arity if ns.arity else rng.randint(1, 3)
            expr = gen_expr(rng, n_args, ns.depth)
            program = compile_program(expr, cfg)
            cases = [
                tuple(rng.randint(0, ns.max_value) for _ in range(n_args))
                for _ in range(ns.samples)
            ]
            report = run_diff(expr, program, cases, fuel=ns.fuel, max_steps=ns.max_steps)
            total_cases += report.cases
            mismatches.extend(report.mismatches)
            timeouts += report.timeouts
        report = DiffReport(total_cases, mismatches, timeouts, seed=ns.seed)
    else:
        if not ns.program or ns.args is None:
            raise ConfigError("diff needs either a program file with --args or --random N")
        expr = parse_program(Path(ns.program).read_text())
        cases = _parse_ranges(ns.args, check_arity(expr))
        program = compile_program(expr, cfg)
        report = run_diff(expr, program, cases, fuel=ns.fuel, max_steps=ns.max_steps)
    _print_report(report)
    return 5 if report.mismatches else 0


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="murec",
        description="Compile recursive function expressions to spiking circuits and run them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="lower a .rec program to a circuit file")
    p.add_argument("program", help="path to the .rec source")
    p.add_argument("-o", "--output", help="circuit file to write (default <stem>.circuit.json)")
    p.add_argument("--big-m", type=int, default=_env_big_m(), help="separation constant")
    p.add_argument(
        "--max-arg", type=int, default=1_000_000, help="largest argument the circuit must accept"
    )
    p.add_argument(
        "--strict-primitive",
        action="store_true",
        help="reject constructions that need native gadgets or loops",
    )
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", help="simulate a compiled circuit on bound inputs")
    p.add_argument("circuit", help="path to a compiled .circuit.json file")
    p.add_argument(
        "--in",
        dest="inputs",
        action="append",
        metavar="NAME=VALUE",
        help="bind an input port (repeatable)",
    )
    p.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    p.add_argument("--raster", help="raster file to write (default <stem>.raster.<fmt>)")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.add_argument("--trace", help="also write every delivery to this CSV file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="evaluate a .rec program with the fueled interpreter")
    p.add_argument("program", help="path to the .rec source")
    p.add_argument("args", nargs="*", help="natural-number arguments")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diff", help="differential-test circuits against the interpreter")
    p.add_argument("program", nargs="?", help="path to the .rec source (with --args)")
    p.add_argument("--args", help="per-argument ranges, e.g. 0..10,0..10")
    p.add_argument("--random", type=int, metavar="N", help="generate N random expressions")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--arity", type=int, help="fix the arity of generated expressions")
    p.add_argument("--samples", type=int, default=5, help="argument tuples per expression")
    p.add_argument("--max-value", type=int, default=50, help="largest sampled argument")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    p.add_argument("--big-m", type=int, default=_env_big_m())
    p.add_argument("--max-arg", type=int, default=1_000_000)
    p.set_defaults(func=cmd_diff)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        parser = build_parser()
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except (ParseError, ArityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, StrictModeViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UnknownPort, UnboundPort) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 64
    except InvalidCircuit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
