"""Hopfield-Tank analogue network for Ising minimisation.

Explicit Euler integration of ``dx/dt = -x/tau + J v + I``, ``v = tanh(x/x0)``.
Spins are read out as ``sign(v)`` at the final iterate.  External fields of
the instance act as the bias ``I`` (plus the uniform ``HTParams.bias``).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numba
import numpy as np

from .instances import IsingInstance, energy
from .seeding import mix64


class HTDivergenceError(FloatingPointError):
    pass


class BandUnreachable(RuntimeError):
    pass


@dataclass(frozen=True)
class HTParams:
    dt: float = 0.9
    tau: float = 1.0
    x0: float = 3.0
    bias: float = 0.0
    max_iters: int = 3000
    # stop when ||-x/tau + J v + I||_inf < fixpoint_tol; None runs the full budget
    fixpoint_tol: Optional[float] = 1e-6
    init_amplitude: float = 0.25
    # record the Ising energy every this many iterations (0: final state only)
    record_every: int = 1

    def __post_init__(self):
        if self.dt <= 0 or self.tau <= 0 or self.x0 <= 0 or self.init_amplitude <= 0:
            raise ValueError("dt, tau, x0 and init_amplitude must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


class HTState(NamedTuple):
    x: np.ndarray
    v: np.ndarray


@dataclass
class HTTrace:
    x: np.ndarray
    v: np.ndarray
    energy_history: np.ndarray
    proximity_history: Optional[np.ndarray]
    iterations: np.ndarray
    iterations_run: int
    converged: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "energy", "proximity"])
        prox = self.proximity_history
        for k, (it, e) in enumerate(zip(self.iterations, self.energy_history)):
            w.writerow([int(it), repr(float(e)), "" if prox is None else repr(float(prox[k]))])
        return buf.getvalue()


def activation_integral(u, x0: float):
    """``int_0^u g^{-1}(t) dt`` for ``g = tanh(x/x0)``: ``x0 (u atanh u + ln(1-u^2)/2)``."""
    u = np.asarray(u, dtype=np.float64)
    return x0 * (u * np.arctanh(u) + 0.5 * np.log1p(-u * u))


def _bias(instance: IsingInstance, params: HTParams) -> np.ndarray:
    return instance.fields + params.bias


def ht_step(instance: IsingInstance, state: HTState, params: HTParams) -> HTState:
    """One Euler step; the coupling product walks the sparse edge list."""
    x, v = state
    if x.shape != (instance.n,) or v.shape != (instance.n,):
        raise ValueError("state does not match the instance size")
    with np.errstate(over="ignore", invalid="ignore"):
        x = x + params.dt * (instance.csr @ v - x / params.tau + _bias(instance, params))
    if not np.all(np.isfinite(x)):
        raise HTDivergenceError("non-finite state; reduce dt")
    return HTState(x, np.tanh(x / params.x0))


def lyapunov(instance: IsingInstance, v, params: HTParams) -> float:
    """``-1/2 v.J.v - I.v + (1/tau) sum F(v_i)`` with the closed-form integral ``F``."""
    v = np.asarray(v, dtype=np.float64)
    if np.any(np.abs(v) >= 1):
        raise ValueError("activations must lie strictly inside (-1, 1)")
    inter = -0.5 * float(v @ (instance.csr @ v))
    return (inter - float(_bias(instance, params) @ v)
            + float(activation_integral(v, params.x0).sum()) / params.tau)


def run_seeds(seed: int, runs: int) -> list[int]:
    """Per-run seeds ``mix64(seed, r)``; run ``r`` is the same whatever the batch."""
    return [mix64(seed, r) for r in range(runs)]


@numba.njit(cache=True)
def _refresh(r, S, F, E, indptr, indices, data, h):
    n = S.shape[1]
    e = 0.0
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * S[r, indices[p]]
        F[r, i] = acc + h[i]
        e -= 0.5 * S[r, i] * acc + h[i] * S[r, i]
    E[r] = e


@numba.njit(cache=True)
def _init_spins(V, S, F, E, indptr, indices, data, h):
    R, n = V.shape
    for r in range(R):
        for i in range(n):
            S[r, i] = 1 if V[r, i] >= 0 else -1
        _refresh(r, S, F, E, indptr, indices, data, h)


@numba.njit(cache=True)
def _drive(indptr, indices, data, bias, X, V, active, moved, dt, tau, tol, use_tol):
    """Euler update of ``X`` for every active run; returns False on a non-finite state."""
    R, n = X.shape
    d = np.empty(n)
    for r in range(R):
        moved[r] = False
        if not active[r]:
            continue
        res = 0.0
        for i in range(n):
            acc = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                acc += data[p] * V[r, indices[p]]
            d[i] = acc - X[r, i] / tau + bias[i]
            a = abs(d[i])
            if a > res:
                res = a
        if not np.isfinite(res):
            return False
        if use_tol and res < tol:
            active[r] = False
            continue
        for i in range(n):
            X[r, i] = X[r, i] + dt * d[i]
        moved[r] = True
    return True


@numba.njit(cache=True)
def _track(indptr, indices, data, h, V, S, F, E, moved, steps, exact, ground, etol):
    """Follow sign flips of the moved runs: spins, local fields and energies.

    Returns the number of runs whose energy equals ``ground``.
    """
    R, n = V.shape
    hits = 0
    for r in range(R):
        if moved[r]:
            for i in range(n):
                s_new = 1 if V[r, i] >= 0 else -1
                if s_new != S[r, i]:
                    E[r] += 2.0 * S[r, i] * F[r, i]
                    S[r, i] = s_new
                    for p in range(indptr[i], indptr[i + 1]):
                        F[r, indices[p]] += 2.0 * data[p] * s_new
            steps[r] += 1
            if not exact and steps[r] % 1024 == 0:
                _refresh(r, S, F, E, indptr, indices, data, h)
        if abs(E[r] - ground) <= etol:
            hits += 1
    return hits


class HTBatch:
    """Independent HT runs integrated side by side, one row per run.

    Each row follows exactly the arithmetic of ``ht_run`` with its seed, so a
    batch reproduces single runs bit for bit.  Runs that meet the fixed-point
    criterion are frozen.
    """

    def __init__(self, instance: IsingInstance, params: HTParams, seeds):
        self.instance = instance
        self.params = params
        J = instance.csr
        self.arrays = (J.indptr.astype(np.int64), J.indices.astype(np.int64),
                       J.data.astype(np.float64))
        self.bias = _bias(instance, params).astype(np.float64)
        self.h = instance.fields.astype(np.float64)
        n = instance.n
        rows = [np.random.default_rng(int(s)).uniform(
            -params.init_amplitude, params.init_amplitude, n) for s in seeds]
        self.X = np.array(rows, dtype=np.float64).reshape(len(rows), n)
        R = self.X.shape[0]
        self.V = np.empty_like(self.X)
        self.S = np.empty((R, n), dtype=np.int64)
        self.F = np.empty_like(self.X)
        self.E = np.empty(R)
        self.active = np.ones(R, dtype=np.bool_)
        self.steps = np.zeros(R, dtype=np.int64)
        self.iteration = 0
        self.moved = np.zeros(R, dtype=np.bool_)
        self.V[:] = np.tanh(self.X / params.x0)
        _init_spins(self.V, self.S, self.F, self.E, *self.arrays, self.h)

    def advance(self, n_steps: int = 1, ground: float = np.nan, etol: float = 0.0) -> np.ndarray:
        """Run ``n_steps`` steps; returns the ground-hit count after each."""
        p = self.params
        tol = 0.0 if p.fixpoint_tol is None else p.fixpoint_tol
        use_tol = p.fixpoint_tol is not None
        exact = self.instance.is_integral
        hits = np.zeros(n_steps, dtype=np.int64)
        for t in range(n_steps):
            if not _drive(*self.arrays, self.bias, self.X, self.V, self.active, self.moved,
                          p.dt, p.tau, tol, use_tol):
                raise HTDivergenceError(f"non-finite state at iteration {self.iteration}; "
                                        "reduce dt")
            if self.moved.all():
                np.tanh(self.X / p.x0, out=self.V)
            elif self.moved.any():
                self.V[self.moved] = np.tanh(self.X[self.moved] / p.x0)
            hits[t] = _track(*self.arrays, self.h, self.V, self.S, self.F, self.E,
                             self.moved, self.steps, exact, ground, etol)
            self.iteration += 1
        return hits

    def spins(self) -> np.ndarray:
        """Current sign readout, one run per row."""
        return self.S.astype(np.int8)

    def energies(self) -> np.ndarray:
        return self.E.copy()

    def all_converged(self) -> bool:
        return self.params.fixpoint_tol is not None and not self.active.any()


def ht_run(instance: IsingInstance, params: HTParams | None = None, seed: int = 0,
           ground_energy: float | None = None):
    """Integrate from uniform random ``x`` in ``[-a, a]`` and read out ``sign(v)``.

    Returns ``(spins, energy, trace)``.
    """
    params = params or HTParams()
    batch = HTBatch(instance, params, [seed])
    rec = params.record_every
    its, ens = [0], [float(batch.E[0])]
    while batch.iteration < params.max_iters and not batch.all_converged():
        chunk = params.max_iters - batch.iteration
        if rec:
            chunk = min(chunk, rec - batch.iteration % rec)
        batch.advance(chunk)
        run = int(batch.steps[0])
        if rec and run % rec == 0 and run != its[-1]:
            its.append(run)
            ens.append(float(batch.E[0]))
    s = batch.spins()[0]
    e = energy(instance, s)
    run = int(batch.steps[0])
    if its[-1] != run:
        its.append(run)
        ens.append(e)
    ens_arr = np.array(ens)
    prox = ens_arr / ground_energy if ground_energy not in (None, 0) else None
    trace = HTTrace(batch.X[0].copy(), batch.V[0].copy(), ens_arr, prox, np.array(its),
                    run, bool(params.fixpoint_tol is not None and not batch.active[0]))
    return s, e, trace


def _energy_tol(instance: IsingInstance, ground_energy: float) -> float:
    return 0.0 if instance.is_integral else 1e-9 * max(1.0, abs(ground_energy))


def ground_state_probability(instance: IsingInstance, ground_energy: float, runs: int,
                             params: HTParams | None = None, seed: int = 0) -> float:
    """Fraction of ``runs`` independent ``ht_run`` calls that end at ``ground_energy``."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    params = params or HTParams()
    batch = HTBatch(instance, params, run_seeds(seed, runs))
    while batch.iteration < params.max_iters and not batch.all_converged():
        batch.advance(min(1024, params.max_iters - batch.iteration))
    final = energy(instance, batch.spins())
    hits = np.abs(final - ground_energy) <= _energy_tol(instance, ground_energy)
    return float(np.count_nonzero(hits)) / runs


class HitCurve:
    """Ground-state hit counts after every iteration budget ``T``, computed lazily.

    ``prob(T)`` equals ``ground_state_probability`` with ``max_iters = T``.
    """

    def __init__(self, instance: IsingInstance, ground_energy: float, runs: int,
                 params: HTParams, seed: int):
        self.batch = HTBatch(instance, params, run_seeds(seed, runs))
        self.ground = float(ground_energy)
        self.etol = _energy_tol(instance, ground_energy)
        self.runs = runs
        e0 = self.batch.E
        self.counts = [int(np.count_nonzero(np.abs(e0 - self.ground) <= self.etol))]

    def prob(self, T: int) -> float:
        missing = T + 1 - len(self.counts)
        if missing > 0:
            if self.batch.all_converged():
                self.counts.extend([self.counts[-1]] * missing)
            else:
                self.counts.extend(self.batch.advance(missing, self.ground, self.etol).tolist())
        return self.counts[T] / self.runs


@dataclass
class IterationSearch:
    n_iter: int
    p_measured: float
    evaluations: list

    def to_record(self) -> dict:
        return asdict(self)


def find_iterations(instance: IsingInstance, ground_energy: float, band, runs: int = 250,
                    params: HTParams | None = None, seed: int = 0,
                    ceiling: int = 1 << 20) -> IterationSearch:
    """Smallest-effort iteration budget whose hit rate lies in ``band``.

    Doubles the budget from 1 until the rate reaches ``band[0]``; if it
    overshoots ``band[1]`` the last bracket is bisected.  ``band[0] == 0``
    means any nonzero rate.  Raises ``BandUnreachable`` past ``ceiling`` or
    when bisection closes without landing inside the band.
    """
    p_lo, p_hi = map(float, band)
    if not (0 <= p_lo <= p_hi <= 1) or p_hi == 0:
        raise ValueError(f"invalid band {band}")
    params = params or HTParams()
    curve = HitCurve(instance, ground_energy, runs, params, seed)
    evals = []

    def inside(p):
        return p_lo <= p <= p_hi and p > 0

    T, below = 1, 0
    while True:
        p = curve.prob(T)
        evals.append((T, p))
        if inside(p):
            return IterationSearch(T, p, evals)
        if p > p_hi:
            break
        below = T
        if T >= ceiling:
            raise BandUnreachable(f"rate {p:.3f} below band after {ceiling} iterations")
        T = min(2 * T, ceiling)
    lo, hi = below, T
    while hi - lo > 1:
        mid = (lo + hi) // 2
        p = curve.prob(mid)
        evals.append((mid, p))
        if inside(p):
            return IterationSearch(mid, p, evals)
        if p < p_lo:
            lo = mid
        else:
            hi = mid
    raise BandUnreachable(f"hit rate jumps over band {band} between {lo} and {hi}")


def iterations_for_probability(instance: IsingInstance, ground_energy: float, band,
                               runs: int = 250, params: HTParams | None = None,
                               seed: int = 0, ceiling: int = 1 << 20) -> int:
    return find_iterations(instance, ground_energy, band, runs, params, seed, ceiling).n_iter


def run_summary(spins, e, trace: HTTrace, seed: int) -> str:
    return json.dumps({"seed": seed, "energy": e, "iterations_run": trace.iterations_run,
                       "converged": trace.converged, "spins": [int(x) for x in spins]})
