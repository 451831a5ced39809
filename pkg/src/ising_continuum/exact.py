"""Exact ground states: exhaustive enumeration and branch-and-bound.

``brute_force`` walks the hypercube in Gray-code order with incremental
energy updates.  ``branch_and_bound`` is a depth-first search with
admissible node bounds and reports an optimality gap normalised by
``|E_best|``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .instances import IsingInstance, energy, sign_pattern

BRUTE_FORCE_MAX_N = 32
# spins enumerated inside one dense block by the blocked enumerator
BLOCK_BITS = 12
# B&B kernel returns to Python every this many nodes (time-limit checks, gap trace)
BB_CHUNK_NODES = 1 << 16
# per-depth spectral bounds are precomputed up to this size
BB_SPECTRAL_MAX_N = 400

OPTIMAL, TIME_LIMIT, BUDGET = "optimal", "time_limit", "budget"
TARGET_GAP = "target_gap"


@dataclass
class SolveReport:
    best_energy: float
    best_config: np.ndarray
    lower_bound: float
    gap: float
    status: str
    nodes_explored: int
    elapsed: float
    ground_degeneracy: Optional[int] = None
    gap_trace: list = field(default_factory=list)
    time_to_zero_gap: Optional[float] = None
    nodes_to_zero_gap: Optional[int] = None
    audit_violations: Optional[int] = None
    method: str = ""

    def to_json(self) -> str:
        doc = {
            "best_energy": self.best_energy,
            "best_config": [int(x) for x in self.best_config],
            "lower_bound": self.lower_bound,
            "gap": _json_float(self.gap),
            "status": self.status,
            "nodes_explored": int(self.nodes_explored),
            "elapsed": self.elapsed,
            "ground_degeneracy": self.ground_degeneracy,
            "time_to_zero_gap": self.time_to_zero_gap,
            "nodes_to_zero_gap": self.nodes_to_zero_gap,
            "method": self.method,
            "gap_trace": [{"elapsed_s": t, "nodes": k, "gap": _json_float(g),
                           "best_energy": b, "lower_bound": lb}
                          for t, k, g, b, lb in self.gap_trace],
        }
        return json.dumps(doc)

    def gap_trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["elapsed_s", "gap", "best_energy", "lower_bound"])
        for t, _k, g, b, lb in self.gap_trace:
            w.writerow([repr(t), repr(g), repr(b), repr(lb)])
        return buf.getvalue()


def _json_float(x):
    return x if math.isfinite(x) else "inf"


def optimality_gap(best_energy: float, lower_bound: float) -> float:
    """``(E_best - E_lower) / |E_best|``; 0 when the bound meets the incumbent.

    Returns ``inf`` when ``E_best == 0`` but the bound is still below it.
    """
    num = best_energy - lower_bound
    if num < -1e-9 * max(1.0, abs(best_energy)):
        raise ValueError(f"lower bound {lower_bound} exceeds best energy {best_energy}")
    if num <= 0:
        return 0.0
    if best_energy == 0:
        return math.inf
    return num / abs(best_energy)


def _csr_arrays(instance: IsingInstance):
    J = instance.csr
    return (J.indptr.astype(np.int64), J.indices.astype(np.int64),
            J.data.astype(np.float64))


# ---------------------------------------------------------------------------
# Gray-code enumeration


@numba.njit(cache=True)
def _gray_kernel(n, m, indptr, indices, data, h, integral, refresh_bits):
    s = np.ones(n)
    f = h.copy()
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            f[i] += data[p] * s[indices[p]]
    E = 0.0
    for i in range(n):
        E -= 0.5 * s[i] * (f[i] - h[i]) + h[i] * s[i]
    best = E
    best_code = np.int64(0)
    count = np.int64(1)
    code = np.int64(0)
    visited = np.int64(1)
    total = np.int64(1) << m
    refresh_mask = (np.int64(1) << refresh_bits) - 1
    for t in range(1, total):
        i = 0
        while not (t >> i) & 1:
            i += 1
        E += 2.0 * s[i] * f[i]
        s[i] = -s[i]
        si2 = 2.0 * s[i]
        for p in range(indptr[i], indptr[i + 1]):
            f[indices[p]] += data[p] * si2
        code ^= np.int64(1) << i
        visited += 1
        if not integral and (t & refresh_mask) == 0:
            for a in range(n):
                f[a] = h[a]
                for p in range(indptr[a], indptr[a + 1]):
                    f[a] += data[p] * s[indices[p]]
            E = 0.0
            for a in range(n):
                E -= 0.5 * s[a] * (f[a] - h[a]) + h[a] * s[a]
        tol = 0.0 if integral else 1e-9 * (1.0 + abs(best))
        if E < best - tol:
            best = E
            best_code = code
            count = 1
        elif E <= best + tol:
            count += 1
    return best, best_code, count, visited


def gray_sequence(m: int):
    """Indices flipped between consecutive reflected-Gray-code states over ``m`` bits."""
    out = []
    for t in range(1, 1 << m):
        out.append((t & -t).bit_length() - 1)
    return out


def _decode(code: int, n: int) -> np.ndarray:
    s = np.ones(n, dtype=np.int8)
    for i in range(n):
        if (code >> i) & 1:
            s[i] = -1
    return s


def brute_force(instance: IsingInstance, count_degeneracy: bool = False,
                method: str = "gray") -> SolveReport:
    """Exact minimum by exhaustive enumeration.

    With zero fields the last spin is pinned to +1 (global flip symmetry), so
    ``2^(n-1)`` states are visited; degeneracy is reported over all ``2^n``.
    ``method="blocked"`` evaluates the same states with dense block products,
    which is much faster for dense couplings.
    """
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force is capped at n = {BRUTE_FORCE_MAX_N}")
    t0 = time.perf_counter()
    z2 = not instance.has_fields
    m = n - 1 if z2 else n
    if method == "gray":
        indptr, indices, data = _csr_arrays(instance)
        best, code, count, visited = _gray_kernel(
            n, m, indptr, indices, data, instance.fields.astype(np.float64),
            instance.is_integral, 22)
        config = _decode(int(code), n)
    elif method == "blocked":
        config, count, visited = _blocked_enumerate(instance, m)
    else:
        raise ValueError(f"unknown enumeration method {method!r}")
    best = energy(instance, config)
    degeneracy = int(count) * (2 if z2 else 1) if count_degeneracy else None
    elapsed = time.perf_counter() - t0
    return SolveReport(best, config, best, 0.0, OPTIMAL, int(visited), elapsed,
                       degeneracy, [(elapsed, int(visited), 0.0, best, best)],
                       elapsed, int(visited), method=f"brute_force/{method}")


def _blocked_enumerate(instance: IsingInstance, m: int):
    """Enumerate spins ``0..m-1`` (others pinned to +1) with block products.

    The low ``b`` spins form a table of all ``2^b`` patterns; for each chunk of
    high-spin patterns the low-block energies are one matrix product.
    """
    n = instance.n
    J = instance.matrix()
    h = instance.fields
    b = min(m, BLOCK_BITS)
    L = np.arange(b)
    H = np.arange(b, n)          # high spins, including pinned ones
    a = m - b                    # enumerated high spins are H[:a]
    codes_L = np.arange(1 << b)
    S_L = 1.0 - 2.0 * ((codes_L[:, None] >> L[None, :]) & 1)
    J_LL = J[np.ix_(L, L)]
    T_L = -0.5 * np.einsum("ij,jk,ik->i", S_L, J_LL, S_L) - S_L @ h[L]
    J_LH = J[np.ix_(L, H)]
    J_HH = J[np.ix_(H, H)]
    h_H = h[H]
    tol = 0.0 if instance.is_integral else 1e-9
    best = math.inf
    best_code = 0
    count = 0
    chunk = max(1, min(1 << a, (1 << 22) >> b))
    for start in range(0, 1 << a, chunk):
        codes_H = np.arange(start, min(start + chunk, 1 << a))
        bits = (codes_H[:, None] >> np.arange(a)[None, :]) & 1
        S_H = np.ones((codes_H.size, H.size))
        S_H[:, :a] = 1.0 - 2.0 * bits
        E_H = -0.5 * np.einsum("ij,jk,ik->i", S_H, J_HH, S_H) - S_H @ h_H
        G = J_LH @ S_H.T
        M = T_L[:, None] - S_L @ G + E_H[None, :]
        lo = float(M.min())
        thr = tol * (1.0 + abs(min(lo, best)))
        if lo < best - thr:
            best = lo
            count = 0
            r, c = np.unravel_index(int(np.argmin(M)), M.shape)
            best_code = int(codes_L[r]) | (int(codes_H[c]) << b)
        thr = tol * (1.0 + abs(best))
        count += int(np.count_nonzero(M <= best + thr))
    return _decode(best_code, n), count, 1 << m


# ---------------------------------------------------------------------------
# branch and bound


def _variable_order(instance: IsingInstance) -> np.ndarray:
    """Decreasing weighted degree; ties follow a reverse Cuthill-McKee order.

    The bandwidth-reducing tie-break keeps the boundary between fixed and
    free spins small on regular graphs, where every degree ties.
    """
    wdeg = np.zeros(instance.n)
    np.add.at(wdeg, instance.rows, np.abs(instance.weights))
    np.add.at(wdeg, instance.cols, np.abs(instance.weights))
    rank = np.arange(instance.n)
    if instance.num_edges:
        rcm = reverse_cuthill_mckee(instance.csr.tocsr(), symmetric_mode=True)
        rank[rcm] = np.arange(instance.n)
    return np.lexsort((rank, -np.round(wdeg, 12))).astype(np.int64)


def _interval_bounds(instance: IsingInstance, order: np.ndarray) -> np.ndarray:
    """``-sum |J_ij|`` over pairs inside the suffix ``order[d:]``, for each depth."""
    n = instance.n
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    first = np.minimum(pos[instance.rows], pos[instance.cols])
    absw = np.zeros(n + 1)
    np.add.at(absw, first, np.abs(instance.weights))
    return -np.cumsum(absw[::-1])[::-1]


def _quadratic_bounds(instance: IsingInstance, order: np.ndarray) -> np.ndarray:
    """Lower bound on ``-sum_{free pairs} J_ij s_i s_j`` for each depth.

    The larger of the interval bound ``-sum |J_ij|`` and the spectral bound
    ``-(|F|/2) lambda_max(J_FF)`` over the free suffix ``F = order[d:]``.
    """
    n = instance.n
    bounds = _interval_bounds(instance, order)
    if n <= BB_SPECTRAL_MAX_N and instance.num_edges:
        J = instance.matrix()[np.ix_(order, order)]
        for d in range(n - 1):
            lam = float(np.linalg.eigvalsh(J[d:, d:])[-1])
            spec = -0.5 * (n - d) * lam
            spec -= 1e-9 * (1.0 + abs(spec))
            bounds[d] = max(bounds[d], spec)
    bounds[n] = 0.0
    return bounds


@numba.njit(cache=True)
def _round_bound(lb, integral, parity):
    if not integral:
        return lb
    r = math.ceil(lb - 1e-7)
    if (r - parity) % 2 != 0:
        r += 1
    return float(r)


@numba.njit(cache=True)
def _apply(k, val, s, f, st, indptr, indices, data):
    # st[0] = E_fixed, st[1] = sum_{free} |f_i|
    st[0] -= f[k] * val
    st[1] -= abs(f[k])
    s[k] = val
    for p in range(indptr[k], indptr[k + 1]):
        j = indices[p]
        if s[j] == 0:
            st[1] -= abs(f[j])
            f[j] += data[p] * val
            st[1] += abs(f[j])
        else:
            f[j] += data[p] * val


@numba.njit(cache=True)
def _undo(k, val, s, f, st, indptr, indices, data):
    for p in range(indptr[k], indptr[k + 1]):
        j = indices[p]
        if s[j] == 0:
            st[1] -= abs(f[j])
            f[j] -= data[p] * val
            st[1] += abs(f[j])
        else:
            f[j] -= data[p] * val
    s[k] = 0
    st[1] += abs(f[k])
    st[0] += f[k] * val


@numba.njit(cache=True)
def _bb_kernel(n, order, indptr, indices, data, quad, integral, parity, z2,
               s, f, st, stage, first_val, second_val, second_lb, node_lb, consistent,
               inc, inc_s, ctr, node_limit, audit_s, audit_E, do_audit):
    """Resumable depth-first branch and bound.

    ``ctr`` holds [depth, nodes, audit_violations, finished]; ``inc`` holds the
    incumbent energy.  Returns when finished or when ``nodes`` reaches
    ``node_limit``.
    """
    INF = np.inf
    d = ctr[0]
    nodes = ctr[1]
    eps = 0.0 if integral else 1e-9 * (1.0 + abs(inc[0]))
    while True:
        if d < 0:
            ctr[3] = 1
            break
        if nodes >= node_limit:
            break
        stg = stage[d]
        if stg == 0:
            if d == n:
                if st[0] < inc[0] - eps:
                    inc[0] = st[0]
                    for a in range(n):
                        inc_s[a] = s[a]
                d -= 1
                continue
            k = order[d]
            lbs = np.empty(2)
            for t in range(2):
                val = 1 if t == 0 else -1
                if z2 and d == 0 and val == -1:
                    lbs[t] = INF
                    continue
                _apply(k, val, s, f, st, indptr, indices, data)
                lb = st[0] - st[1] + quad[d + 1]
                _undo(k, val, s, f, st, indptr, indices, data)
                lb = _round_bound(lb, integral, parity)
                if lb < node_lb[d]:
                    lb = node_lb[d]
                lbs[t] = lb
                if do_audit and consistent[d] and audit_s[k] == val:
                    if lb > audit_E + 1e-9 * (1.0 + abs(audit_E)):
                        ctr[2] += 1
            if lbs[0] <= lbs[1]:
                fv, fl, sv, sl = 1, lbs[0], -1, lbs[1]
            else:
                fv, fl, sv, sl = -1, lbs[1], 1, lbs[0]
            first_val[d] = fv
            second_val[d] = sv
            second_lb[d] = sl
            if fl < inc[0] - eps:
                _apply(k, fv, s, f, st, indptr, indices, data)
                stage[d] = 1
                consistent[d + 1] = consistent[d] and audit_s[k] == fv
                d += 1
                stage[d] = 0
                node_lb[d] = fl
                nodes += 1
            else:
                second_lb[d] = INF
                stage[d] = 3
                d -= 1
        elif stg == 1:
            k = order[d]
            _undo(k, first_val[d], s, f, st, indptr, indices, data)
            sl = second_lb[d]
            second_lb[d] = INF
            if sl < inc[0] - eps:
                sv = second_val[d]
                _apply(k, sv, s, f, st, indptr, indices, data)
                stage[d] = 2
                consistent[d + 1] = consistent[d] and audit_s[k] == sv
                d += 1
                stage[d] = 0
                node_lb[d] = sl
                nodes += 1
            else:
                stage[d] = 3
                d -= 1
        elif stg == 2:
            _undo(order[d], second_val[d], s, f, st, indptr, indices, data)
            stage[d] = 3
            d -= 1
        else:
            d -= 1
    ctr[0] = d
    ctr[1] = nodes


def _open_lower_bound(ctr, stage, node_lb, second_lb, inc):
    """Smallest bound among unexplored regions of the search tree."""
    if ctr[3]:
        return inc
    d = int(ctr[0])
    lb = inc
    if stage[d] == 0:
        lb = min(lb, node_lb[d])
    for k in range(d + 1):
        if stage[k] == 1:
            lb = min(lb, second_lb[k])
    return lb


def greedy_descent(instance: IsingInstance, s) -> np.ndarray:
    """Single-spin-flip steepest descent to a local minimum."""
    s = np.array(s, dtype=np.float64)
    J = instance.csr
    f = J @ s + instance.fields
    while True:
        gain = 2.0 * s * f          # energy change of flipping each spin
        i = int(np.argmin(gain))
        if gain[i] >= -1e-12:
            return s.astype(np.int8)
        s[i] = -s[i]
        lo, hi = J.indptr[i], J.indptr[i + 1]
        f[J.indices[lo:hi]] += 2.0 * s[i] * J.data[lo:hi]


def initial_incumbent(instance: IsingInstance, seed: int = 0, ht_iters: int = 1000):
    """Best of the top-eigenvector sign patterns and one Hopfield-Tank run, each polished by descent."""
    from .htnet import HTParams, ht_run
    from .spectral import e_lambda_patterns

    cands = []
    if instance.num_edges or instance.has_fields:
        pats, ens, _ = e_lambda_patterns(instance)
        cands.append(pats[int(np.argmin(ens))])
        s_ht, _, _ = ht_run(instance, HTParams(max_iters=ht_iters, record_every=0), seed)
        cands.append(s_ht)
    else:
        cands.append(np.ones(instance.n, dtype=np.int8))
    best, best_e = None, math.inf
    for c in cands:
        for cand in (c, greedy_descent(instance, c)):
            e = energy(instance, cand)
            if e < best_e:
                best, best_e = np.asarray(cand, dtype=np.int8), e
    return best, best_e


class _Search:
    """Kernel state of one resumable depth-first search.

    Spins are visited in index order ``0..n-1``; ``quad[d]`` bounds the
    couplings among spins ``d..n-1`` and ``h`` holds the external fields.
    """

    def __init__(self, J, h, quad, integral, parity, z2, inc_s, inc_e, audit_s=None):
        n = J.shape[0]
        self.n = n
        self.arrays = (J.indptr.astype(np.int64), J.indices.astype(np.int64),
                       J.data.astype(np.float64))
        self.quad = np.asarray(quad, dtype=np.float64)
        self.integral, self.parity, self.z2 = integral, parity, z2
        self.s = np.zeros(n, dtype=np.int64)
        self.f = np.asarray(h, dtype=np.float64).copy()
        self.st = np.array([0.0, float(np.abs(self.f).sum())])
        self.stage = np.zeros(n + 1, dtype=np.int64)
        self.first_val = np.zeros(n + 1, dtype=np.int64)
        self.second_val = np.zeros(n + 1, dtype=np.int64)
        self.second_lb = np.full(n + 1, np.inf)
        self.node_lb = np.full(n + 1, -np.inf)
        self.consistent = np.zeros(n + 1, dtype=np.bool_)
        self.inc = np.array([float(inc_e)])
        self.best = np.asarray(inc_s, dtype=np.int64).copy()
        self.kernel_best = np.zeros(n, dtype=np.int64)
        self.ctr = np.zeros(4, dtype=np.int64)
        self.audit_s = np.zeros(n, dtype=np.int64)
        self.audit_E = 0.0
        self.do_audit = audit_s is not None
        if self.do_audit:
            a = np.asarray(audit_s, dtype=np.int64)
            if z2 and a[0] == -1:
                a = -a
            self.audit_s[:] = a
            self.audit_E = _energy_csr(J, h, a)
            self.consistent[0] = True
        root = _round_bound(self.st[0] - self.st[1] + self.quad[0], integral, parity)
        self.lb = min(root, self.inc[0])
        self.node_lb[0] = self.lb

    @property
    def nodes(self) -> int:
        return int(self.ctr[1])

    @property
    def done(self) -> bool:
        return bool(self.ctr[3]) or self.inc[0] - self.lb <= 0

    def advance(self, node_limit: int) -> None:
        indptr, indices, data = self.arrays
        before = self.inc[0]
        _bb_kernel(self.n, np.arange(self.n, dtype=np.int64), indptr, indices, data,
                   self.quad, self.integral, self.parity, self.z2, self.s, self.f, self.st,
                   self.stage, self.first_val, self.second_val, self.second_lb, self.node_lb,
                   self.consistent, self.inc, self.kernel_best, self.ctr, node_limit,
                   self.audit_s, self.audit_E, self.do_audit)
        if self.inc[0] < before:
            self.best = self.kernel_best.copy()
        open_lb = _open_lower_bound(self.ctr, self.stage, self.node_lb, self.second_lb,
                                    self.inc[0])
        lb = max(self.lb, min(open_lb, self.inc[0]))
        if self.integral and lb < self.inc[0]:
            lb = min(_round_bound(lb, True, self.parity), self.inc[0])
        self.lb = self.inc[0] if self.ctr[3] else lb


def _energy_csr(J, h, s) -> float:
    s = np.asarray(s, dtype=np.float64)
    return float(-0.5 * s @ (J @ s) - h @ s)


def _extend(prev: np.ndarray, J) -> np.ndarray:
    """Prepend the spin that best fits ``prev`` on the suffix it couples to."""
    row = J.getrow(0)
    field = float(row.data @ prev[row.indices - 1]) if row.nnz else 0.0
    return np.concatenate([[1 if field >= 0 else -1], prev]).astype(np.int64)


class _Clock:
    def __init__(self, time_limit, node_budget):
        self.t0 = time.perf_counter()
        self.time_limit = time_limit
        self.node_budget = node_budget
        self.nodes = 0

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def expired(self):
        if self.time_limit is not None and self.elapsed() >= self.time_limit:
            return TIME_LIMIT
        if self.node_budget is not None and self.nodes >= self.node_budget:
            return BUDGET
        return None

    def run(self, search: _Search, chunk: int):
        """Advance ``search`` by one chunk; returns a truncation status or None."""
        status = self.expired()
        if status:
            return status
        step = chunk if self.node_budget is None else min(chunk, self.node_budget - self.nodes)
        start = search.nodes
        search.advance(start + step)
        self.nodes += search.nodes - start
        return None


def branch_and_bound(instance: IsingInstance, time_limit: float | None = None,
                     target_gap: float = 0.0, node_budget: int | None = None,
                     seed: int = 0, incumbent=None, audit_config=None,
                     bound: str = "doll", chunk_nodes: int = BB_CHUNK_NODES) -> SolveReport:
    """Depth-first branch and bound with best-bound-first child order.

    Spins are fixed in decreasing weighted degree.  A node's bound is the
    energy of the fixed part, minus ``sum |f_i|`` over the free spins' local
    fields (fixed neighbours plus external field), plus a bound ``Q_d`` on the
    couplings among the free spins.

    ``bound="spectral"`` takes ``Q_d`` as the larger of the interval bound
    ``-sum |J_ij|`` and ``-(|F|/2) lambda_max(J_FF)``.  ``bound="doll"``
    (default) first solves the coupling-only subproblems on the free suffixes,
    smallest first, and uses their exact optima as ``Q_d``; each of those
    searches is itself bounded by the optima already found.  Node counts and
    the gap trace cover all phases.  For integer instances bounds are rounded
    up to the attainable parity.

    ``node_budget`` makes the run deterministic; ``time_limit`` is wall-clock.
    ``audit_config`` (a known optimum) counts bounds of the final search that
    exceed its energy along its path, which would mean an inadmissible bound.
    """
    if bound not in ("doll", "spectral"):
        raise ValueError(f"unknown bound {bound!r}")
    clock = _Clock(time_limit, node_budget)
    n = instance.n
    order = _variable_order(instance)
    Jp = instance.csr[order][:, order].tocsr()
    hp = instance.fields[order].astype(np.float64)
    integral = instance.is_integral
    parity = int(round(instance.weights.sum() + instance.fields.sum())) % 2 if integral else 0
    quad = _quadratic_bounds(instance, order)
    # -sum |J_ij| over pairs with at least one spin before depth d
    interval = _interval_bounds(instance, order)
    prefix = interval[0] - interval
    habs = float(np.abs(hp).sum())

    if incumbent is None:
        inc_s, inc_e = initial_incumbent(instance, seed)
    else:
        inc_s = np.asarray(incumbent, dtype=np.int8)
        inc_e = energy(instance, inc_s)
    inc_p = np.asarray(inc_s, dtype=np.int64)[order]

    lb = min(_round_bound(quad[0] - habs, integral, parity), inc_e)
    trace = [(0.0, 0, optimality_gap(inc_e, lb), inc_e, lb)]

    def reached(lb_now):
        if inc_e - lb_now <= 0:
            return OPTIMAL
        if target_gap > 0 and optimality_gap(inc_e, lb_now) <= target_gap:
            return TARGET_GAP
        return None

    def record(lb_now, best_now):
        gap = optimality_gap(best_now, min(lb_now, best_now))
        if gap < trace[-1][2] or best_now < trace[-1][3]:
            trace.append((clock.elapsed(), clock.nodes, gap, best_now, lb_now))

    status = reached(lb)
    quad_exact = quad.copy()
    if bound == "doll" and status is None:
        prev = np.zeros(0, dtype=np.int64)
        for d in range(n - 1, 0, -1):
            sub = Jp[d:, d:].tocsr()
            w_sub = float(sub.data.sum()) / 2
            q = quad_exact[d:].copy()
            row = np.abs(sub.getrow(0).data).sum()
            q[0] = max(q[0], quad_exact[d + 1] - row)
            guess = _extend(prev, sub)
            search = _Search(sub, np.zeros(n - d), q, integral,
                             int(round(w_sub)) % 2 if integral else 0, True,
                             guess, _energy_csr(sub, np.zeros(n - d), guess))
            while not search.done:
                status = clock.run(search, chunk_nodes)
                if status:
                    break
                lb = max(lb, min(_round_bound(search.lb + prefix[d] - habs, integral, parity),
                                 inc_e))
                record(lb, inc_e)
            if status:
                break
            quad_exact[d] = search.inc[0]
            prev = search.best
            lb = max(lb, min(_round_bound(quad_exact[d] + prefix[d] - habs, integral, parity),
                             inc_e))
            record(lb, inc_e)
            status = reached(lb)
            if status:
                break

    best_e, best_p = inc_e, inc_p
    audit_violations = 0 if audit_config is not None else None
    if status is None:
        audit_p = None
        if audit_config is not None:
            audit_p = np.asarray(audit_config, dtype=np.int64)[order]
        search = _Search(Jp, hp, quad_exact, integral, parity, not instance.has_fields,
                         inc_p, inc_e, audit_p)
        search.lb = max(search.lb, lb)
        while not search.done:
            status = clock.run(search, chunk_nodes)
            if status:
                break
            lb = max(lb, search.lb)
            record(lb, float(search.inc[0]))
            if target_gap > 0 and optimality_gap(search.inc[0], lb) <= target_gap:
                status = TARGET_GAP
                break
        best_e, best_p = float(search.inc[0]), search.best
        if audit_violations is not None:
            audit_violations = int(search.ctr[2])
        if status is None:
            status = OPTIMAL
    best = np.empty(n, dtype=np.int8)
    best[order] = best_p
    # recompute from scratch; the search's running sum may differ in the last bit
    best_e = energy(instance, best)
    lb = best_e if status == OPTIMAL else min(lb, best_e)
    gap = optimality_gap(best_e, lb)
    elapsed = clock.elapsed()
    if trace[-1][2] != gap or trace[-1][4] != lb:
        trace.append((elapsed, clock.nodes, gap, best_e, lb))
    report = SolveReport(best_e, best, lb, gap, status, clock.nodes, elapsed, None, trace,
                         method=f"branch_and_bound/{bound}")
    if gap == 0:
        report.time_to_zero_gap = elapsed
        report.nodes_to_zero_gap = clock.nodes
    report.audit_violations = audit_violations
    return report


def solve(instance: IsingInstance, node_budget: int | None = None,
          time_limit: float | None = None, brute_force_max_n: int = 26,
          seed: int = 0) -> SolveReport:
    """Exact ground state: enumeration for small ``n``, branch and bound beyond."""
    if instance.n <= brute_force_max_n:
        method = "blocked" if instance.n >= 16 else "gray"
        return brute_force(instance, method=method)
    return branch_and_bound(instance, time_limit=time_limit, node_budget=node_budget,
                            seed=seed)
