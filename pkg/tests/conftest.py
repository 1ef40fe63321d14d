"""Shared program family and run helpers used across the tests.

The five programs exercise every construction: primitive recursion for
addition/multiplication/predecessor, truncated subtraction by composition of
recursions, and minimization over the subtraction body.
"""
from __future__ import annotations

import pytest

from murec import (
    Compose,
    Const,
    Engine,
    Injection,
    Mu,
    PrimRec,
    Proj,
    SimConfig,
    Succ,
    bind_args,
    compile_program,
)

ADD = PrimRec(Proj(1, 1), Compose(Succ(), (Proj(2, 3),)))
MUL = PrimRec(Const(0, 1), Compose(ADD, (Proj(2, 3), Proj(3, 3))))
PRED = PrimRec(Const(0, 1), Proj(1, 3))  # pred(i, d) = max(i - 1, 0), d unused
MONUS = PrimRec(Proj(1, 1), Compose(PRED, (Proj(2, 3), Proj(1, 3))))  # monus(z, x) = x - z
MU_MONUS = Mu(MONUS)  # least z >= 1 with x - z = 0, i.e. max(x, 1)
ALWAYS_POSITIVE = Mu(Compose(Succ(), (Proj(1, 2),)))  # f(z, x) = z + 1 > 0: diverges

ADD_REC = "(prec (proj 1 1) (compose (succ) ((proj 2 3))))"
MUL_REC = f"(prec (const 0 1) (compose {ADD_REC} ((proj 2 3) (proj 3 3))))"
PRED_REC = "(prec (const 0 1) (proj 1 3))"
MONUS_REC = f"(prec (proj 1 1) (compose {PRED_REC} ((proj 2 3) (proj 1 3))))"
MU_MONUS_REC = f"(mu {MONUS_REC})"


@pytest.fixture(scope="session")
def compiled_add():
    return compile_program(ADD)


@pytest.fixture(scope="session")
def compiled_mul():
    return compile_program(MUL)


@pytest.fixture(scope="session")
def compiled_pred():
    return compile_program(PRED)


@pytest.fixture(scope="session")
def compiled_monus():
    return compile_program(MONUS)


@pytest.fixture(scope="session")
def compiled_mu_monus():
    return compile_program(MU_MONUS)


def engine_run(program, args, max_steps=10**6, big_m=None):
    """Run a compiled program on a retained engine so state can be inspected."""
    binding = bind_args(program, args)
    ports = {p.name: p.neuron for p in program.circuit.ports}
    injections = tuple(
        Injection(neuron=ports[name], value=value, time=0)
        for name, value in sorted(binding.items())
    )
    config = SimConfig(max_steps=max_steps, big_m=big_m or program.meta["big_m"])
    engine = Engine(program.circuit, config, injections)
    outcome = engine.run()
    return engine, outcome


def assert_return_precedes_erase(raster, markers, require_fire=True):
    """Loop-safety law: the candidate a return trigger releases was never erased.

    Deliveries at the return cell's store all cross unit-delay synapses, so the
    arrival times are the source spike times plus one.  For every trigger
    arrival there must be a store at or before it with no erase in between.
    A nested loop that was never activated has nothing to satisfy; pass
    ``require_fire=False`` to treat that as vacuously true.
    """
    stores = sorted(e.time + 1 for e in raster if e.neuron == markers["store_src"])
    erases = sorted(e.time + 1 for e in raster if e.neuron == markers["cont_out"])
    triggers = sorted(e.time + 1 for e in raster if e.neuron == markers["ret_fire"])
    if not triggers:
        assert not require_fire, "the return branch never fired"
        return
    for tau in triggers:
        before = [s for s in stores if s <= tau]
        assert before, f"no store had arrived by the trigger at t={tau}"
        last_store = max(before)
        clobbered = [t for t in erases if last_store <= t <= tau]
        assert not clobbered, (
            f"erase at t={clobbered} lands between the store at t={last_store} "
            f"and the trigger at t={tau}"
        )
