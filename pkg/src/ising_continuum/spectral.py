"""Eigenanalysis of coupling matrices and the spectral simplicity verdict.

An instance is *simple* when the sign pattern of a leading eigenvector of
``J`` (largest eigenvalue) reaches the ground-state energy.  Fields are
absorbed into an auxiliary spin before any spectral work.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .instances import (IsingInstance, absorb_fields, circulant_first_row,
                        energy, sign_pattern)

DEGENERACY_RTOL = 1e-9
RESIDUAL_RTOL = 1e-8
JACOBI_MAX_SWEEPS = 60
DENSE_MAX_N = 4096
# extra random combinations tried inside a top eigenspace of dimension >= 3
N_RANDOM_COMBINATIONS = 64


class EigenConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    """Eigenpairs sorted by decreasing eigenvalue; ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    top_multiplicity: int
    method: str = "lapack"

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def top_space(self) -> np.ndarray:
        return self.eigenvectors[:, :self.top_multiplicity]


def _summary(vals: np.ndarray, vecs: np.ndarray, method: str) -> SpectralSummary:
    order = np.argsort(-vals, kind="stable")
    vals = np.ascontiguousarray(vals[order])
    vecs = np.ascontiguousarray(vecs[:, order])
    tol = DEGENERACY_RTOL * max(1.0, abs(vals[0]))
    mult = int(np.count_nonzero(vals >= vals[0] - tol))
    return SpectralSummary(vals, vecs, mult, method)


# ---------------------------------------------------------------------------
# cyclic Jacobi


@numba.njit(cache=True)
def _jacobi_kernel(A, max_sweeps, tol):
    n = A.shape[0]
    V = np.eye(n)
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += A[p, q] * A[p, q]
        if np.sqrt(off) <= tol:
            return V, sweep, True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    return V, max_sweeps, False


def jacobi_eigh(J: np.ndarray, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(J, dtype=np.float64, copy=True)
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    V, _, ok = _jacobi_kernel(A, max_sweeps, 1e-14 * scale * A.shape[0])
    if not ok:
        raise EigenConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    return np.diag(A).copy(), V


# ---------------------------------------------------------------------------
# power iteration with deflation


def power_top(instance: IsingInstance, m: int = 4, tol: float = 1e-10,
              max_iters: int = 200_000, seed: int = 0, guard: int = 8):
    """Top ``m`` eigenpairs by block power iteration with Rayleigh-Ritz extraction.

    The matrix is shifted by its Gershgorin radius so every eigenvalue is
    non-negative and powers favour the largest ones.  ``guard`` extra vectors
    widen the block, so convergence goes with the ratio of eigenvalue
    ``m + guard + 1`` to eigenvalue ``m`` instead of neighbouring ones.
    """
    J = instance.csr
    n = instance.n
    m = min(m, n)
    b = min(n, m + guard)
    shift = float(np.abs(J).sum(axis=1).max()) if instance.num_edges else 0.0
    gen = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(gen.standard_normal((n, b)))
    for it in range(max_iters):
        JQ = J @ Q
        T = Q.T @ JQ
        vals, W = np.linalg.eigh(0.5 * (T + T.T))
        order = np.argsort(-vals)[:m]
        vals, X = vals[order], Q @ W[:, order]
        R = J @ X - X * vals
        if np.all(np.linalg.norm(R, axis=0) <= tol * np.maximum(1.0, np.abs(vals))):
            return vals, X
        Q, _ = np.linalg.qr(JQ + shift * Q)
    raise EigenConvergenceError("power iteration exhausted its budget")


# ---------------------------------------------------------------------------
# public entry points


def eig_sym(instance: IsingInstance, method: str = "auto", top_m: int = 4) -> SpectralSummary:
    """Eigenpairs of the coupling matrix.

    ``method`` is ``lapack`` (dense, default up to ``DENSE_MAX_N`` spins),
    ``jacobi`` (dense cyclic Jacobi) or ``power`` (top ``top_m`` pairs only).
    """
    if instance.has_fields:
        raise ValueError("absorb fields before spectral analysis")
    if method == "auto":
        method = "lapack" if instance.n <= DENSE_MAX_N else "power"
    if method == "lapack":
        vals, vecs = np.linalg.eigh(instance.matrix())
    elif method == "jacobi":
        vals, vecs = jacobi_eigh(instance.matrix())
    elif method == "power":
        vals, vecs = power_top(instance, top_m)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return _summary(vals, vecs, method)


def circulant_spectrum(first_row) -> SpectralSummary:
    """Spectrum of a symmetric circulant from its first row via a direct real DFT.

    ``lambda_m = sum_j c_j cos(2 pi j m / N)``; eigenvectors are the orthonormal
    cosine and sine columns.
    """
    c = np.asarray(first_row, dtype=np.float64)
    N = c.shape[0]
    if N < 1:
        raise ValueError("empty first row")
    if not np.allclose(c[1:], c[1:][::-1], rtol=0, atol=1e-12):
        raise ValueError("first row is not symmetric (c[j] != c[N-j])")
    j = np.arange(N)
    vals, cols = [], []
    for m in range(N // 2 + 1):
        phase = 2 * np.pi * ((j * m) % N) / N
        lam = float(c @ np.cos(phase))
        if m == 0 or 2 * m == N:
            vals.append(lam)
            cols.append(np.cos(phase) / np.sqrt(N))
        else:
            vals.extend([lam, lam])
            cols.append(np.cos(phase) * np.sqrt(2.0 / N))
            cols.append(np.sin(phase) * np.sqrt(2.0 / N))
    return _summary(np.array(vals), np.column_stack(cols), "circulant")


def spectrum_for(instance: IsingInstance, method: str = "auto") -> SpectralSummary:
    """Spectrum with the circulant fast path when the matrix is circulant."""
    if method == "auto":
        c = circulant_first_row(instance)
        if c is not None:
            return circulant_spectrum(c)
    return eig_sym(instance, method)


# ---------------------------------------------------------------------------
# sign patterns of the top eigenspace


def _circle_patterns(B: np.ndarray) -> np.ndarray:
    """Every sign pattern of ``cos(t) b0 + sin(t) b1`` for generic ``t`` in [0, pi)."""
    a, b = B[:, 0], B[:, 1]
    scale = np.abs(B).max()
    live = (np.abs(a) + np.abs(b)) > 1e-12 * scale
    # a cos t + b sin t = 0  <=>  t = atan2(-a, b) (mod pi)
    crit = np.mod(np.arctan2(-a[live], b[live]), np.pi)
    crit = np.unique(np.round(crit, 12))
    if crit.size == 0:
        mids = np.array([0.5])
    else:
        nxt = np.append(crit[1:], crit[0] + np.pi)
        mids = 0.5 * (crit + nxt)
    V = np.outer(np.cos(mids), a) + np.outer(np.sin(mids), b)
    return sign_pattern(V)


def top_patterns(summary: SpectralSummary, seed: int = 0) -> np.ndarray:
    """Candidate spin patterns from the top eigenspace, one per row.

    The first ``top_multiplicity`` rows are the signs of the basis vectors.  A
    two-dimensional eigenspace is then swept exhaustively over the circle of
    unit combinations; larger eigenspaces add ``N_RANDOM_COMBINATIONS`` seeded
    random combinations.
    """
    B = summary.top_space
    pats = [sign_pattern(B.T)]
    d = B.shape[1]
    if d == 2:
        pats.append(_circle_patterns(B))
    elif d > 2:
        gen = np.random.default_rng(seed)
        coef = gen.standard_normal((N_RANDOM_COMBINATIONS, d))
        pats.append(sign_pattern(coef @ B.T))
    return np.concatenate(pats, axis=0)


@dataclass(frozen=True, eq=False)
class OscVerdict:
    e_lambda_energy: float
    candidate: np.ndarray
    is_simple: bool
    degenerate: bool
    top_multiplicity: int
    matched_vector_index: Optional[int]
    n_candidates: int

    def to_record(self) -> dict:
        return {"E_lambda": float(self.e_lambda_energy), "is_simple": bool(self.is_simple),
                "degenerate": bool(self.degenerate),
                "top_multiplicity": int(self.top_multiplicity)}


def energy_tolerance(instance: IsingInstance, ground_energy: float) -> float:
    return 0.0 if instance.is_integral else 1e-9 * max(1.0, abs(ground_energy))


def e_lambda_patterns(instance: IsingInstance, summary: SpectralSummary | None = None):
    """Energies of the top-eigenspace sign patterns, in the original spin space.

    Returns ``(patterns, energies)`` with patterns of length ``instance.n``.
    """
    work = absorb_fields(instance) if instance.has_fields else instance
    if summary is None:
        summary = spectrum_for(work)
    pats = top_patterns(summary)
    if work is not instance:
        # gauge so that the auxiliary spin reads +1, then drop it
        pats = (pats * pats[:, :1])[:, 1:]
    return pats, energy(instance, pats), summary


def osc_check(instance: IsingInstance, ground_energy: float,
              summary: SpectralSummary | None = None) -> OscVerdict:
    """Decide whether a top-eigenvector sign pattern attains ``ground_energy``.

    ``summary`` may be supplied for the (field-absorbed) coupling matrix to
    avoid recomputing the spectrum.
    """
    pats, ens, summary = e_lambda_patterns(instance, summary)
    tol = energy_tolerance(instance, ground_energy)
    best = int(np.argmin(ens))
    e_lambda = float(ens[best])
    if e_lambda < ground_energy - tol - 1e-9 * max(1.0, abs(ground_energy)):
        raise ValueError(f"a top-eigenvector pattern reaches {e_lambda}, below the "
                         f"supplied ground energy {ground_energy}")
    hits = np.flatnonzero(np.abs(ens - ground_energy) <= tol)
    matched = int(hits[0]) if hits.size else None
    return OscVerdict(e_lambda, pats[best].copy(), matched is not None,
                      summary.top_multiplicity > 1, summary.top_multiplicity,
                      matched, int(pats.shape[0]))


def projected_eigvec_energy(instance: IsingInstance, summary: SpectralSummary, i: int) -> float:
    """Energy of ``sign(e_i)`` for the i-th computed eigenvector."""
    if not 0 <= i < summary.eigenvectors.shape[1]:
        raise IndexError(f"eigenpair {i} not available")
    return float(energy(instance, sign_pattern(summary.eigenvectors[:, i])))


# ---------------------------------------------------------------------------
# eigenbasis decomposition of an amplitude vector


@dataclass(frozen=True, eq=False)
class StateDecomposition:
    gammas: np.ndarray
    null_component: np.ndarray
    null_component_norm: float
    reconstruction_error: float
    reconstructed_energy: float


def state_decompose(instance: IsingInstance, v, summary: SpectralSummary,
                    params=None, null_tol: float = 1e-9) -> StateDecomposition:
    """Split amplitudes ``v`` into eigencomponents and a null-space residual.

    ``gammas[i] = <v, e_i>`` for every computed eigenvector; ``q`` collects the
    components with (numerically) zero eigenvalue plus anything outside the
    computed eigenvectors.  ``reconstructed_energy`` is the Lyapunov value
    written in the eigenbasis,
    ``-1/2 sum lambda_i gamma_i^2 - I.v + (1/tau) sum F(v_j)``,
    with the closed-form activation integral from :mod:`htnet`.
    """
    from .htnet import HTParams, activation_integral

    v = np.asarray(v, dtype=np.float64)
    if v.shape != (instance.n,) or summary.eigenvectors.shape[0] != instance.n:
        raise ValueError("dimension mismatch between v, instance and summary")
    params = params or HTParams()
    E = summary.eigenvectors
    lam = summary.eigenvalues
    gammas = E.T @ v
    live = np.abs(lam) > null_tol * max(1.0, float(np.abs(lam).max(initial=0.0)))
    q = v - E[:, live] @ gammas[live]
    # with a full eigenbasis q must coincide with the zero-eigenvalue components
    err = float(np.linalg.norm(q - E[:, ~live] @ gammas[~live]))
    bias = instance.fields + params.bias
    e = (-0.5 * float(np.sum(lam * gammas ** 2)) - float(bias @ v)
         + float(np.sum(activation_integral(v, params.x0))) / params.tau)
    return StateDecomposition(gammas, q, float(np.linalg.norm(q)), err, e)


def residuals(instance: IsingInstance, summary: SpectralSummary):
    """Scaled eigen-residuals and orthonormality defect, for invariant checks."""
    J = instance.matrix()
    E = summary.eigenvectors
    R = J @ E - E * summary.eigenvalues
    scale = np.maximum(1.0, np.abs(summary.eigenvalues))
    res = float((np.abs(R).max(axis=0) / scale).max()) if E.size else 0.0
    ortho = float(np.abs(E.T @ E - np.eye(E.shape[1])).max()) if E.size else 0.0
    return res, ortho
