"""Ising instances: data model, generators, rewiring and energy evaluation.

Energies follow ``H(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i`` with every
unordered coupling stored once.  "Unweighted" MaxCut couplings are
antiferromagnetic, ``J_ij = -1``.  Indices are 0-based throughout.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .seeding import rng as make_rng

# Configuration-model restarts before gen_random_regular gives up.
PAIRING_RETRY_BUDGET = 10_000
# Random stub pairs tried before a partial matching counts as stuck.
LOCAL_PAIR_TRIES = 200
# Proposals per accepted swap before rewire/gen_planar3r_field give up.
SWAP_RETRY_BUDGET = 2_000


class InstanceError(ValueError):
    """Invalid generator parameters or malformed instance data."""


class RewireError(RuntimeError):
    """No admissible edge swap could be found within the retry budget."""


# ---------------------------------------------------------------------------
# coupling distributions


@dataclass(frozen=True)
class Dist:
    """Coupling distribution: ``unweighted`` (-1), ``bimodal`` (+-1) or ``gaussian``."""

    kind: str = "unweighted"
    mean: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if self.kind not in ("unweighted", "bimodal", "gaussian"):
            raise InstanceError(f"unknown distribution {self.kind!r}")
        if self.variance < 0:
            raise InstanceError("variance must be non-negative")

    @classmethod
    def parse(cls, text: "str | Dist") -> "Dist":
        """Parse ``unweighted``, ``bimodal``, ``gaussian`` or ``gaussian(mean,var)``."""
        if isinstance(text, Dist):
            return text
        m = re.fullmatch(r"\s*(\w+)\s*(?:\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\))?\s*", text)
        if m is None:
            raise InstanceError(f"cannot parse distribution {text!r}")
        kind = m.group(1).lower()
        if m.group(2) is not None:
            if kind != "gaussian":
                raise InstanceError(f"{kind} takes no parameters")
            return cls(kind, float(m.group(2)), float(m.group(3)))
        return cls(kind)

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "unweighted":
            return np.full(size, -1.0)
        if self.kind == "bimodal":
            return gen.choice(np.array([-1.0, 1.0]), size=size)
        return gen.normal(self.mean, math.sqrt(self.variance), size=size)

    def __str__(self) -> str:
        if self.kind == "gaussian" and (self.mean, self.variance) != (0.0, 1.0):
            return f"gaussian({self.mean:g},{self.variance:g})"
        return self.kind


# ---------------------------------------------------------------------------
# data model


def spins(s, n: int | None = None) -> np.ndarray:
    """Validate a spin configuration and return it as an int8 array of +-1."""
    arr = np.asarray(s)
    if arr.ndim != 1:
        raise InstanceError("a spin configuration is one-dimensional")
    if n is not None and arr.shape[0] != n:
        raise InstanceError(f"expected {n} spins, got {arr.shape[0]}")
    if not np.all((arr == 1) | (arr == -1)):
        raise InstanceError("spins must be exactly -1 or +1")
    return arr.astype(np.int8)


def sign_pattern(x) -> np.ndarray:
    """Sign with the tie-break ``sign(0) = +1``."""
    x = np.asarray(x)
    return np.where(x >= 0, 1, -1).astype(np.int8)


@dataclass(frozen=True, eq=False)
class IsingInstance:
    """Symmetric coupling graph plus external fields.

    ``rows[k] < cols[k]`` and edge ``k`` has coupling ``weights[k]``.  Edges are
    kept sorted lexicographically; zero couplings are never stored.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    fields: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise InstanceError("an instance needs at least one spin")
        rows = np.asarray(self.rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(self.cols, dtype=np.int64).reshape(-1)
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if not (rows.shape == cols.shape == weights.shape):
            raise InstanceError("edge arrays differ in length")
        fields = (np.zeros(n) if self.fields is None
                  else np.asarray(self.fields, dtype=np.float64).reshape(-1))
        if fields.shape[0] != n:
            raise InstanceError(f"expected {n} fields, got {fields.shape[0]}")
        if rows.size:
            if np.any(rows == cols):
                raise InstanceError("self-loops are not allowed")
            lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
            if lo.min() < 0 or hi.max() >= n:
                raise InstanceError("edge endpoint out of range")
            order = np.lexsort((hi, lo))
            lo, hi, weights = lo[order], hi[order], weights[order]
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if np.any(dup):
                raise InstanceError("duplicate edge")
            if np.any(weights == 0) or not np.all(np.isfinite(weights)):
                raise InstanceError("couplings must be finite and nonzero")
            rows, cols = lo, hi
        if not np.all(np.isfinite(fields)):
            raise InstanceError("fields must be finite")
        for name, value in (("n", n), ("rows", rows), ("cols", cols),
                            ("weights", weights), ("fields", fields)):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "meta", dict(self.meta or {}))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence], fields=None,
                   meta: dict | None = None) -> "IsingInstance":
        edges = list(edges)
        if edges:
            arr = np.asarray(edges, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise InstanceError("edges must be (i, j, w) triples")
            i, j = arr[:, 0], arr[:, 1]
            if np.any(i != np.round(i)) or np.any(j != np.round(j)):
                raise InstanceError("edge endpoints must be integers")
            rows, cols, w = i.astype(np.int64), j.astype(np.int64), arr[:, 2]
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            w = np.zeros(0)
        return cls(n, rows, cols, w, fields, meta or {})

    # -- views ------------------------------------------------------------

    @property
    def num_edges(self) -> int:
        return int(self.rows.shape[0])

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w))
                for i, j, w in zip(self.rows, self.cols, self.weights)]

    @property
    def has_fields(self) -> bool:
        return bool(np.any(self.fields != 0))

    @cached_property
    def is_integral(self) -> bool:
        """True when every coupling and field is an integer (energies are exact)."""
        return bool(np.all(self.weights == np.round(self.weights))
                    and np.all(self.fields == np.round(self.fields)))

    def matrix(self) -> np.ndarray:
        """Dense symmetric coupling matrix with zero diagonal."""
        J = np.zeros((self.n, self.n))
        J[self.rows, self.cols] = self.weights
        J[self.cols, self.rows] = self.weights
        return J

    @cached_property
    def csr(self) -> sp.csr_matrix:
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        w = np.concatenate([self.weights, self.weights])
        return sp.csr_matrix((w, (r, c)), shape=(self.n, self.n))

    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.rows, self.cols]),
                           minlength=self.n)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.rows.tolist(), self.cols.tolist()))

    def with_meta(self, **updates) -> "IsingInstance":
        meta = dict(self.meta)
        meta.update(updates)
        return IsingInstance(self.n, self.rows, self.cols, self.weights,
                             self.fields, meta)

    def same_couplings(self, other: "IsingInstance") -> bool:
        return (self.n == other.n and np.array_equal(self.rows, other.rows)
                and np.array_equal(self.cols, other.cols)
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.fields, other.fields))

    # -- persistence --------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "n": self.n,
            "edges": [[i, j, w] for i, j, w in self.edges],
            "fields": [float(h) for h in self.fields],
            "meta": {
                "model": self.meta.get("model", "custom"),
                "params": self.meta.get("params", {}),
                "seed": self.meta.get("seed"),
            },
        }
        extra = {k: v for k, v in self.meta.items()
                 if k not in ("model", "params", "seed")}
        if extra:
            doc["meta"].update(extra)
        return json.dumps(doc, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "IsingInstance":
        doc = json.loads(text)
        try:
            n = int(doc["n"])
            edges = doc["edges"]
        except (KeyError, TypeError) as exc:
            raise InstanceError(f"malformed instance document: {exc}") from None
        return cls.from_edges(n, edges, doc.get("fields"), doc.get("meta", {}))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "IsingInstance":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _meta(model: str, seed=None, **params) -> dict:
    return {"model": model, "params": params, "seed": seed}


# ---------------------------------------------------------------------------
# energy and frustration


def energy(instance: IsingInstance, s) -> float | np.ndarray:
    """Ising energy of one configuration, or of each row of a 2-D batch."""
    s = np.asarray(s)
    if s.shape[-1] != instance.n:
        raise InstanceError(f"expected {instance.n} spins, got {s.shape[-1]}")
    s = s.astype(np.float64)
    if s.ndim == 1:
        pair = s[instance.rows] * s[instance.cols]
        return float(-(pair @ instance.weights) - instance.fields @ s)
    pair = s[:, instance.rows] * s[:, instance.cols]
    return -(pair @ instance.weights) - s @ instance.fields


def maxcut_value(instance: IsingInstance, s) -> float:
    """Number of cut edges, ``(|E| - sum s_i s_j) / 2``, for unweighted MaxCut."""
    s = spins(s, instance.n).astype(np.float64)
    return float((instance.num_edges - np.sum(s[instance.rows] * s[instance.cols])) / 2)


def frustration(instance: IsingInstance, s) -> tuple[int, float]:
    """Count edges whose coupling preference is violated.

    A ferromagnetic edge (w > 0) wants aligned spins, an antiferromagnetic one
    anti-aligned spins; the edge is frustrated exactly when ``w s_i s_j < 0``.
    """
    s = spins(s, instance.n).astype(np.int64)
    bad = instance.weights * s[instance.rows] * s[instance.cols] < 0
    count = int(np.count_nonzero(bad))
    frac = count / instance.num_edges if instance.num_edges else 0.0
    return count, frac


# ---------------------------------------------------------------------------
# generators


def _circulant_edges(N: int, offsets: Sequence[int], weights: Sequence[float]):
    rows, cols, ws = [], [], []
    for d, w in zip(offsets, weights):
        span = N // 2 if 2 * d == N else N
        for i in range(span):
            j = (i + d) % N
            rows.append(min(i, j))
            cols.append(max(i, j))
            ws.append(w)
    return rows, cols, ws


def gen_circulant(N: int, offsets: Iterable[int], weights=-1.0,
                  meta: dict | None = None) -> IsingInstance:
    """Circulant instance: spin ``i`` couples to ``(i +- d) mod N`` for each offset."""
    offsets = [int(d) for d in offsets]
    if N < 2:
        raise InstanceError("circulant needs N >= 2")
    if len(set(offsets)) != len(offsets):
        raise InstanceError("duplicate offsets")
    for d in offsets:
        if not 1 <= d <= N // 2:
            raise InstanceError(f"offset {d} outside [1, {N // 2}]")
    if np.ndim(weights) == 0:
        weights = [float(weights)] * len(offsets)
    weights = [float(w) for w in weights]
    if len(weights) != len(offsets):
        raise InstanceError("one weight per offset is required")
    rows, cols, ws = _circulant_edges(N, offsets, weights)
    order = sorted(range(len(offsets)), key=lambda k: offsets[k])
    meta = meta or _meta("circulant", None, N=N,
                         offsets=[offsets[k] for k in order],
                         weights=[weights[k] for k in order])
    return IsingInstance(N, rows, cols, ws, np.zeros(N), meta)


def gen_mobius_ladder(n_half: int) -> IsingInstance:
    """Unweighted Mobius ladder on ``N = 2 n_half`` spins: ring plus antipodal chords."""
    if n_half < 2:
        raise InstanceError("Mobius ladder needs n_half >= 2")
    N = 2 * n_half
    return gen_circulant(N, [1, n_half], -1.0,
                         meta=_meta("mobius", None, n_half=n_half))


def gen_random_circulant(N: int, k: int, seed: int, weight: float = -1.0) -> IsingInstance:
    """Random ``k``-regular circulant: ``ceil(k/2)`` distinct offsets drawn uniformly.

    Odd ``k`` requires even ``N`` and always includes the antipodal offset N/2,
    which contributes one neighbour instead of two.
    """
    if not 1 <= k <= N - 1:
        raise InstanceError(f"degree {k} outside [1, {N - 1}]")
    gen = make_rng(seed)
    if k % 2:
        if N % 2:
            raise InstanceError("odd degree needs even N")
        pool = np.arange(1, N // 2)
        chosen = list(gen.choice(pool, size=(k - 1) // 2, replace=False)) + [N // 2]
    else:
        pool = np.arange(1, (N - 1) // 2 + 1)
        chosen = list(gen.choice(pool, size=k // 2, replace=False))
    chosen = sorted(int(d) for d in chosen)
    return gen_circulant(N, chosen, weight,
                         meta=_meta("circulant", seed, N=N, k=k, offsets=chosen))


def _pair_stubs(gen: np.random.Generator, N: int, k: int):
    """One pass of sequential stub pairing; None when it paints itself into a corner."""
    stubs = np.repeat(np.arange(N), k).tolist()
    seen = set()
    while stubs:
        m = len(stubs)
        for _ in range(LOCAL_PAIR_TRIES):
            i, j = (int(x) for x in gen.integers(m, size=2))
            a, b = stubs[i], stubs[j]
            if i != j and a != b and (min(a, b), max(a, b)) not in seen:
                break
        else:
            return None
        seen.add((min(a, b), max(a, b)))
        for idx in sorted((i, j), reverse=True):
            stubs[idx] = stubs[-1]
            stubs.pop()
    return sorted(seen)


def gen_random_regular(N: int, k: int, dist="unweighted", seed: int = 0) -> IsingInstance:
    """Simple ``k``-regular graph from the configuration model.

    Stubs are matched one random pair at a time, skipping pairs that would make
    a loop or a repeated edge; a dead end discards the whole matching.
    """
    dist = Dist.parse(dist)
    if not 0 < k < N or (N * k) % 2:
        raise InstanceError(f"no simple {k}-regular graph on {N} vertices")
    gen = make_rng(seed)
    for _ in range(PAIRING_RETRY_BUDGET):
        pairs = _pair_stubs(gen, N, k)
        if pairs is None:
            continue
        lo = np.array([p[0] for p in pairs], dtype=np.int64)
        hi = np.array([p[1] for p in pairs], dtype=np.int64)
        w = dist.sample(gen, lo.size)
        return IsingInstance(N, lo, hi, w, np.zeros(N),
                             _meta("random_regular", seed, N=N, k=k, dist=str(dist)))
    raise InstanceError(f"configuration model failed {PAIRING_RETRY_BUDGET} times "
                        f"for N={N}, k={k}")


def _complete_edges(n: int):
    r, c = np.triu_indices(n, 1)
    return r, c


def gen_sk(N: int, dist="gaussian", seed: int = 0) -> IsingInstance:
    """Sherrington-Kirkpatrick: complete graph with i.i.d. couplings."""
    dist = Dist.parse(dist)
    if N < 2:
        raise InstanceError("SK needs N >= 2")
    gen = make_rng(seed)
    r, c = _complete_edges(N)
    w = dist.sample(gen, r.size)
    return IsingInstance(N, r, c, w, np.zeros(N), _meta("sk", seed, N=N, dist=str(dist)))


def _torus_edges(rows: int, cols: int):
    if rows < 3 or cols < 3:
        raise InstanceError("torus needs rows >= 3 and cols >= 3")
    r, c = [], []
    for y in range(rows):
        for x in range(cols):
            i = y * cols + x
            for j in (y * cols + (x + 1) % cols, ((y + 1) % rows) * cols + x):
                r.append(min(i, j))
                c.append(max(i, j))
    return np.array(r), np.array(c)


def gen_torus(rows: int, cols: int, dist="unweighted", seed: int = 0) -> IsingInstance:
    """Nearest-neighbour spin glass on a periodic ``rows x cols`` lattice."""
    dist = Dist.parse(dist)
    r, c = _torus_edges(rows, cols)
    w = dist.sample(make_rng(seed), r.size)
    n = rows * cols
    return IsingInstance(n, r, c, w, np.zeros(n),
                         _meta("torus", seed, rows=rows, cols=cols, dist=str(dist)))


def gen_mattis(topology: str, size, dist="bimodal", seed: int = 0, k: int = 3):
    """Mattis model ``J_ij = A_ij eps_i eps_j`` with a planted ground state ``eps``.

    ``topology`` is ``complete`` (size = n), ``torus`` (size = (rows, cols)) or
    ``regular`` (size = n, degree ``k``).  Bimodal ``eps`` are fair +-1 coins;
    gaussian ``eps`` are the signs of standard normal draws.

    Returns ``(instance, eps)``.
    """
    dist = Dist.parse(dist)
    gen = make_rng(seed)
    if topology == "complete":
        n = int(size)
        if n < 2:
            raise InstanceError("Mattis complete graph needs n >= 2")
        r, c = _complete_edges(n)
    elif topology == "torus":
        rows, cols = size
        r, c = _torus_edges(int(rows), int(cols))
        n = int(rows) * int(cols)
    elif topology == "regular":
        n = int(size)
        base = gen_random_regular(n, k, "unweighted", seed=int(gen.integers(2**62)))
        r, c = base.rows, base.cols
    else:
        raise InstanceError(f"unknown Mattis topology {topology!r}")
    if dist.kind == "unweighted":
        eps = np.ones(n, dtype=np.int8)
    elif dist.kind == "bimodal":
        eps = gen.choice(np.array([-1, 1], dtype=np.int8), size=n)
    else:
        eps = sign_pattern(gen.normal(dist.mean, math.sqrt(dist.variance), size=n))
    w = eps[r].astype(np.float64) * eps[c]
    params = {"topology": topology, "size": size if np.ndim(size) == 0 else list(size),
              "dist": str(dist)}
    if topology == "regular":
        params["k"] = k
    inst = IsingInstance(n, r, c, w, np.zeros(n), {"model": "mattis", "params": params,
                                                    "seed": seed})
    return inst, eps


def _chimera_edges(cells_x: int, cells_y: int):
    r, c = [], []

    def idx(y, x, u):
        return (y * cells_x + x) * 8 + u

    for y in range(cells_y):
        for x in range(cells_x):
            for u in range(4):
                for v in range(4, 8):
                    r.append(idx(y, x, u))
                    c.append(idx(y, x, v))
            if y + 1 < cells_y:
                for u in range(4):
                    r.append(idx(y, x, u))
                    c.append(idx(y + 1, x, u))
            if x + 1 < cells_x:
                for v in range(4, 8):
                    r.append(idx(y, x, v))
                    c.append(idx(y, x + 1, v))
    return np.array(r), np.array(c)


def gen_chimera_bf(cells_x: int, cells_y: int, p0: float = 0.9, p1: float = 0.1,
                   seed: int = 0) -> IsingInstance:
    """Biased ferromagnet on a Chimera graph of K_{4,4} cells.

    Couplings are all +1; fields are 1 with probability ``p1`` and 0 otherwise.
    An all-zero field draw is resampled so the bias toward all-up is nonempty.
    """
    if cells_x < 1 or cells_y < 1:
        raise InstanceError("Chimera needs at least one cell")
    if not (math.isclose(p0 + p1, 1.0) and p0 > p1 > 0):
        raise InstanceError("need p0 + p1 = 1 and p0 > p1 > 0")
    gen = make_rng(seed)
    r, c = _chimera_edges(cells_x, cells_y)
    n = 8 * cells_x * cells_y
    while True:
        h = (gen.random(n) < p1).astype(np.float64)
        if h.any():
            break
    return IsingInstance(n, r, c, np.ones(r.size), h,
                         _meta("chimera_bf", seed, cells_x=cells_x, cells_y=cells_y,
                               p0=p0, p1=p1))


def _prism_edges(n_half: int):
    r, c = [], []
    for i in range(n_half):
        for a, b in ((i, (i + 1) % n_half),
                     (n_half + i, n_half + (i + 1) % n_half),
                     (i, n_half + i)):
            r.append(min(a, b))
            c.append(max(a, b))
    return r, c


def gen_ladder_field(n_half: int) -> IsingInstance:
    """Circular ladder (prism graph), couplings -1, uniform field ``h_i = -1``."""
    if n_half < 3:
        raise InstanceError("ladder needs n_half >= 3")
    r, c = _prism_edges(n_half)
    N = 2 * n_half
    return IsingInstance(N, r, c, -np.ones(len(r)), -np.ones(N),
                         _meta("ladder_field", None, n_half=n_half))


# ---------------------------------------------------------------------------
# rewiring


class _EdgeBag:
    """Mutable simple-graph edge list with O(1) membership and removal."""

    def __init__(self, instance: IsingInstance):
        self.edges = list(zip(instance.rows.tolist(), instance.cols.tolist()))
        self.weight = dict(zip(self.edges, instance.weights.tolist()))
        self.pos = {e: k for k, e in enumerate(self.edges)}

    def __contains__(self, e):
        return e in self.pos

    def replace(self, old, new):
        k = self.pos.pop(old)
        w = self.weight.pop(old)
        self.edges[k] = new
        self.pos[new] = k
        self.weight[new] = w


def _propose_swap(e1, e2, flip: bool):
    (a, b), (c, d) = e1, e2
    pairs = ((a, c), (b, d)) if flip else ((a, d), (b, c))
    return tuple((min(x, y), max(x, y)) for x, y in pairs)


def _admissible(bag: _EdgeBag, new) -> bool:
    n1, n2 = new
    return (n1[0] != n1[1] and n2[0] != n2[1] and n1 != n2
            and n1 not in bag and n2 not in bag)


def _finish(instance: IsingInstance, bag: _EdgeBag, original: set, model_meta: dict):
    rows = np.array([e[0] for e in bag.edges], dtype=np.int64)
    cols = np.array([e[1] for e in bag.edges], dtype=np.int64)
    w = np.array([bag.weight[e] for e in bag.edges])
    kept = sum(1 for e in bag.edges if e in original)
    meta = dict(instance.meta)
    meta.update(model_meta)
    meta["rewired_percent"] = 100.0 * (len(original) - kept) / max(1, len(original))
    return IsingInstance(instance.n, rows, cols, w, instance.fields, meta)


def rewire(instance: IsingInstance, count: int, seed: int,
           restrict_to_original: bool = True) -> IsingInstance:
    """Apply ``count`` degree-preserving double-edge swaps.

    Each swap removes edges ``(a, b), (c, d)`` and adds either ``(a, c), (b, d)``
    or ``(a, d), (b, c)``; proposals that would create a self-loop or a
    duplicate are rejected and redrawn.  With ``restrict_to_original`` the pair
    is drawn among the surviving edges of the input graph; once those admit
    no swap among themselves, one of them is paired with any edge.  The removed edges' couplings move to the new edges.  The result's
    ``meta["rewired_percent"]`` is the share of input edges no longer present.
    """
    if count < 0:
        raise InstanceError("count must be non-negative")
    if count == 0:
        return instance.with_meta(rewired_percent=0.0)
    gen = make_rng(seed)
    bag = _EdgeBag(instance)
    original = set(bag.edges)
    if len(bag.edges) < 2:
        raise RewireError("need at least two edges to swap")
    for _ in range(count):
        pool = [e for e in bag.edges if e in original] if restrict_to_original else []
        for attempt in range(SWAP_RETRY_BUDGET):
            if len(pool) >= 2 and attempt < SWAP_RETRY_BUDGET // 2:
                k1, k2 = gen.choice(len(pool), size=2, replace=False)
                e1, e2 = pool[k1], pool[k2]
            elif pool:
                # the surviving original edges admit no swap among themselves
                e1 = pool[int(gen.integers(len(pool)))]
                e2 = bag.edges[int(gen.integers(len(bag.edges)))]
                if e2 == e1:
                    continue
            else:
                k1, k2 = gen.choice(len(bag.edges), size=2, replace=False)
                e1, e2 = bag.edges[k1], bag.edges[k2]
            new = _propose_swap(e1, e2, bool(gen.integers(2)))
            if _admissible(bag, new):
                bag.replace(e1, new[0])
                bag.replace(e2, new[1])
                break
        else:
            raise RewireError(f"no admissible swap after {SWAP_RETRY_BUDGET} proposals")
    params = dict(instance.meta.get("params", {}))
    return _finish(instance, bag, original,
                   {"rewire": {"count": count, "seed": seed,
                               "restrict_to_original": restrict_to_original,
                               "base_params": params}})


def swap_edges(instance: IsingInstance, remove, add) -> IsingInstance:
    """Deterministic double-edge swap: replace the two edges ``remove`` with ``add``."""
    bag = _EdgeBag(instance)
    original = set(bag.edges)
    old = [tuple(sorted(e)) for e in remove]
    new = [tuple(sorted(e)) for e in add]
    if len(old) != 2 or len(new) != 2:
        raise InstanceError("a swap removes and adds exactly two edges")
    for e in old:
        if e not in bag:
            raise InstanceError(f"edge {e} not present")
    if sorted(x for e in old for x in e) != sorted(x for e in new for x in e):
        raise InstanceError("swap must preserve the degree sequence")
    if not _admissible(bag, tuple(new)):
        raise InstanceError("swap would create a self-loop or duplicate edge")
    bag.replace(old[0], new[0])
    bag.replace(old[1], new[1])
    return _finish(instance, bag, original, {"swap": {"remove": old, "add": new}})


def mobius_odd_swap(n_half: int) -> IsingInstance:
    """Odd-``n_half`` Mobius ladder with the two-edge rewiring that breaks simplicity.

    In 1-based labels the couplings J(1,2) and J(N-2,N-3) become J(1,N-3) and
    J(2,N-2); 0-based that is (0,1),(N-4,N-3) -> (0,N-4),(1,N-3).
    """
    if n_half % 2 == 0 or n_half < 5:
        raise InstanceError("the recipe applies to odd n_half >= 5 (N >= 10)")
    N = 2 * n_half
    inst = swap_edges(gen_mobius_ladder(n_half), [(0, 1), (N - 4, N - 3)],
                      [(0, N - 4), (1, N - 3)])
    return inst.with_meta(model="mobius_odd_swap")


def is_planar(instance: IsingInstance) -> bool:
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(range(instance.n))
    g.add_edges_from(zip(instance.rows.tolist(), instance.cols.tolist()))
    planar, _ = nx.check_planarity(g)
    return bool(planar)


def gen_planar3r_field(N: int, rewire_count: int | None = None, seed: int = 0) -> IsingInstance:
    """Random planar cubic graph with couplings -1 and field -1.

    Starts from the prism on ``N`` vertices and applies ``rewire_count``
    double-edge swaps (default ``N``); a swap is kept only if the graph stays
    simple and planar.
    """
    if N % 2 or N < 6:
        raise InstanceError("planar cubic generator needs even N >= 6")
    count = N if rewire_count is None else int(rewire_count)
    base = gen_ladder_field(N // 2)
    meta = _meta("planar3r_field", seed, N=N, rewire_count=count)
    if count == 0:
        return IsingInstance(N, base.rows, base.cols, base.weights, base.fields,
                             dict(meta, rewired_percent=0.0))
    gen = make_rng(seed)
    bag = _EdgeBag(base)
    original = set(bag.edges)
    for _ in range(count):
        for _attempt in range(SWAP_RETRY_BUDGET):
            k1, k2 = gen.choice(len(bag.edges), size=2, replace=False)
            e1, e2 = bag.edges[k1], bag.edges[k2]
            new = _propose_swap(e1, e2, bool(gen.integers(2)))
            if not _admissible(bag, new):
                continue
            bag.replace(e1, new[0])
            bag.replace(e2, new[1])
            trial = IsingInstance(N, [e[0] for e in bag.edges], [e[1] for e in bag.edges],
                                  -np.ones(len(bag.edges)), base.fields)
            if is_planar(trial):
                break
            bag.replace(new[0], e1)
            bag.replace(new[1], e2)
        else:
            raise RewireError(f"no planar swap after {SWAP_RETRY_BUDGET} proposals")
    out = _finish(base, bag, original, {})
    return IsingInstance(N, out.rows, out.cols, out.weights, out.fields,
                         dict(meta, rewired_percent=out.meta["rewired_percent"]))


# ---------------------------------------------------------------------------
# fields


def absorb_fields(instance: IsingInstance) -> IsingInstance:
    """Move fields into couplings with an auxiliary spin at index 0.

    Original spin ``i`` becomes spin ``i + 1`` and couples to the auxiliary
    spin with weight ``h_i``.  ``H(s) == H_ext([+1, *s])`` for every ``s``.
    """
    h = instance.fields
    nz = np.flatnonzero(h)
    rows = np.concatenate([np.zeros(nz.size, dtype=np.int64), instance.rows + 1])
    cols = np.concatenate([nz + 1, instance.cols + 1])
    w = np.concatenate([h[nz], instance.weights])
    meta = dict(instance.meta)
    meta["absorbed_fields"] = True
    return IsingInstance(instance.n + 1, rows, cols, w, np.zeros(instance.n + 1), meta)


def circulant_first_row(instance: IsingInstance) -> np.ndarray | None:
    """First row of the coupling matrix if it is circulant (and fields vanish), else None."""
    n = instance.n
    if instance.has_fields or n < 2:
        return None
    d = (instance.cols - instance.rows) % n
    c = np.zeros(n)
    seen = np.zeros(n, dtype=np.int64)
    for dd, w in zip(d.tolist(), instance.weights.tolist()):
        for off in {dd, (n - dd) % n}:
            if seen[off] and c[off] != w:
                return None
            c[off] = w
            seen[off] += 1
    # each offset d != n/2 contributes n edges; d == n/2 contributes n/2
    for off in range(1, n // 2 + 1):
        if not seen[off]:
            continue
        expected = n // 2 if 2 * off == n else n
        cnt = int(np.count_nonzero(np.minimum(d, n - d) == off))
        if cnt != expected:
            return None
    return c
