import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ising_continuum import instances as I
from ising_continuum.exact import (BUDGET, OPTIMAL, TIME_LIMIT, branch_and_bound, brute_force,
                                   gray_sequence, greedy_descent, optimality_gap, solve)
from ising_continuum.instances import IsingInstance, energy

from conftest import naive_ground


def test_gray_sequence_visits_every_state_once():
    m = 6
    code, seen = 0, {0}
    for bit in gray_sequence(m):
        code ^= 1 << bit
        seen.add(code)
    assert len(seen) == 1 << m


def test_k4_ground_and_degeneracy():
    rep = brute_force(I.gen_mobius_ladder(2), count_degeneracy=True)
    assert rep.best_energy == -2 and rep.ground_degeneracy == 6


@pytest.mark.parametrize("n_half", [4, 6, 8, 10, 12])
@pytest.mark.parametrize("method", ["gray", "blocked"])
def test_mobius_closed_form(n_half, method):
    rep = brute_force(I.gen_mobius_ladder(n_half), count_degeneracy=True, method=method)
    assert rep.best_energy == -(3 * n_half - 4)
    assert rep.ground_degeneracy == 2 * n_half


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 12),
       dist=st.sampled_from(["gaussian", "bimodal"]), field=st.booleans())
def test_enumeration_matches_dense_oracle(seed, n, dist, field):
    base = I.gen_sk(n, dist, seed=seed)
    h = np.random.default_rng(seed).normal(size=n) if field else None
    inst = IsingInstance(n, base.rows, base.cols, base.weights, h)
    ref, mult = naive_ground(inst)
    for method in ("gray", "blocked"):
        rep = brute_force(inst, count_degeneracy=True, method=method)
        assert rep.best_energy == pytest.approx(ref, abs=1e-9)
        assert energy(inst, rep.best_config) == pytest.approx(ref, abs=1e-9)
        assert rep.ground_degeneracy == mult


def test_brute_force_cap():
    with pytest.raises(ValueError):
        brute_force(I.gen_mobius_ladder(17))


def test_gap_definition():
    assert optimality_gap(-10, -12) == pytest.approx(0.2)
    assert optimality_gap(-10, -10) == 0.0
    assert math.isinf(optimality_gap(0, -1))
    with pytest.raises(ValueError):
        optimality_gap(-10, -9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6),
       family=st.sampled_from(["sk-g", "sk-b", "reg", "torus", "chimera", "field"]))
def test_branch_and_bound_agrees_with_enumeration(seed, family):
    inst = {
        "sk-g": lambda: I.gen_sk(14, "gaussian", seed=seed),
        "sk-b": lambda: I.gen_sk(14, "bimodal", seed=seed),
        "reg": lambda: I.gen_random_regular(18, 3, "gaussian", seed=seed),
        "torus": lambda: I.gen_torus(4, 4, "bimodal", seed=seed),
        "chimera": lambda: I.gen_chimera_bf(1, 2, seed=seed),
        "field": lambda: I.gen_planar3r_field(14, seed=seed),
    }[family]()
    ref = brute_force(inst, method="blocked")
    rep = branch_and_bound(inst, audit_config=ref.best_config)
    assert rep.status == OPTIMAL and rep.gap == 0.0
    assert rep.best_energy == pytest.approx(ref.best_energy, abs=1e-9)
    assert rep.audit_violations == 0


@pytest.mark.parametrize("bound", ["doll", "spectral"])
def test_bounds_both_exact(bound):
    inst = I.gen_random_regular(20, 3, "gaussian", seed=4)
    ref = brute_force(inst, method="blocked").best_energy
    assert branch_and_bound(inst, bound=bound).best_energy == pytest.approx(ref)


def test_mobius_twenty_by_branch_and_bound():
    rep = branch_and_bound(I.gen_mobius_ladder(20))
    assert rep.status == OPTIMAL and rep.best_energy == -56


def test_time_limit_returns_gap():
    inst = I.gen_random_regular(80, 3, "gaussian", seed=1)
    rep = branch_and_bound(inst, time_limit=0.0)
    assert rep.status == TIME_LIMIT
    assert rep.lower_bound <= rep.best_energy
    assert rep.gap > 0


def test_node_budget_is_deterministic():
    inst = I.gen_random_regular(70, 3, "gaussian", seed=2)
    a = branch_and_bound(inst, node_budget=2000)
    b = branch_and_bound(inst, node_budget=2000)
    assert a.status == BUDGET
    assert (a.best_energy, a.lower_bound, a.nodes_explored) == (b.best_energy, b.lower_bound,
                                                                b.nodes_explored)


def test_gap_trace_is_monotone():
    rep = branch_and_bound(I.gen_random_regular(40, 3, "gaussian", seed=5))
    gaps = [g for _, _, g, _, _ in rep.gap_trace]
    assert all(a >= b - 1e-12 for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] == 0.0
    assert rep.nodes_to_zero_gap is not None


def test_report_serialisation():
    rep = branch_and_bound(I.gen_mobius_ladder(8))
    doc = json.loads(rep.to_json())
    assert doc["status"] == OPTIMAL and len(doc["best_config"]) == 16
    assert rep.gap_trace_csv().splitlines()[0] == "elapsed_s,gap,best_energy,lower_bound"


def test_greedy_descent_reaches_local_minimum(rng):
    inst = I.gen_sk(30, "gaussian", seed=3)
    s = greedy_descent(inst, rng.choice([-1, 1], size=30))
    base = energy(inst, s)
    for i in range(30):
        t = s.copy()
        t[i] = -t[i]
        assert energy(inst, t) >= base - 1e-12


def test_solve_dispatches_on_size():
    assert solve(I.gen_mobius_ladder(5)).method.startswith("brute")
    assert solve(I.gen_mobius_ladder(14)).method.startswith("branch_and_bound")
