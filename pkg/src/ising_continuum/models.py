"""Named model families with explicit parameters, buildable from a seed."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import instances as I
from .instances import Dist, InstanceError, IsingInstance

MODEL_KINDS = ("mobius", "mobius-odd-swap", "rewired-mobius", "circulant", "regular", "sk",
               "mattis-complete", "mattis-torus", "mattis-regular", "torus", "chimera",
               "ladder-field", "planar3r-field")


def parse_grid(size) -> tuple[int, int]:
    """``8`` -> (8, 8); ``"4x6"`` -> (4, 6)."""
    if isinstance(size, (tuple, list)):
        a, b = size
        return int(a), int(b)
    m = re.fullmatch(r"\s*(\d+)\s*(?:[xX]\s*(\d+))?\s*", str(size))
    if not m:
        raise InstanceError(f"bad grid size {size!r}")
    a = int(m.group(1))
    return a, int(m.group(2) or a)


@dataclass(frozen=True)
class ModelSpec:
    """A generator family plus its parameters.

    ``size`` is the spin count, except for ``torus``/``mattis-torus`` (rows x
    cols) and ``chimera`` (cells_x x cells_y).
    """

    kind: str
    size: object
    dist: str = "unweighted"
    k: int | None = None
    rewire_frac: float = 0.0
    p0: float = 0.9
    p1: float = 0.1
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InstanceError(f"unknown model {self.kind!r}; choose from {MODEL_KINDS}")
        Dist.parse(self.dist)

    @property
    def label(self) -> str:
        return self.kind

    @property
    def deterministic(self) -> bool:
        """True when the seed does not affect the instance."""
        if self.kind in ("mobius", "mobius-odd-swap", "ladder-field"):
            return True
        if self.kind == "rewired-mobius":
            return self.rewire_frac == 0
        if self.kind == "torus":
            return Dist.parse(self.dist).kind == "unweighted"
        return False

    def params(self) -> dict:
        out = {"kind": self.kind, "size": str(self.size), "dist": self.dist}
        if self.k is not None:
            out["k"] = self.k
        if self.kind == "rewired-mobius":
            out["rewire_frac"] = self.rewire_frac
        if self.kind == "chimera":
            out.update(p0=self.p0, p1=self.p1)
        return out

    def spin_count(self) -> int:
        if self.kind in ("torus", "mattis-torus"):
            r, c = parse_grid(self.size)
            return r * c
        if self.kind == "chimera":
            cx, cy = parse_grid(self.size)
            return 8 * cx * cy
        return int(self.size)

    def _even_half(self) -> int:
        N = int(self.size)
        if N % 2:
            raise InstanceError(f"{self.kind} needs an even spin count, got {N}")
        return N // 2

    def build(self, seed: int) -> IsingInstance:
        kind = self.kind
        if kind == "mobius":
            return I.gen_mobius_ladder(self._even_half())
        if kind == "mobius-odd-swap":
            return I.mobius_odd_swap(self._even_half())
        if kind == "rewired-mobius":
            base = I.gen_mobius_ladder(self._even_half())
            count = rewire_count(base, self.rewire_frac)
            return I.rewire(base, count, seed)
        if kind == "circulant":
            if self.k is None:
                raise InstanceError("circulant needs k")
            return I.gen_random_circulant(int(self.size), self.k, seed)
        if kind == "regular":
            return I.gen_random_regular(int(self.size), self.k or 3, self.dist, seed)
        if kind == "sk":
            return I.gen_sk(int(self.size), self.dist, seed)
        if kind.startswith("mattis-"):
            topo = kind.split("-", 1)[1]
            size = parse_grid(self.size) if topo == "torus" else int(self.size)
            dist = "bimodal" if self.dist == "unweighted" else self.dist
            inst, _eps = I.gen_mattis(topo, size, dist, seed, k=self.k or 3)
            return inst
        if kind == "torus":
            r, c = parse_grid(self.size)
            return I.gen_torus(r, c, self.dist, seed)
        if kind == "chimera":
            cx, cy = parse_grid(self.size)
            return I.gen_chimera_bf(cx, cy, self.p0, self.p1, seed)
        if kind == "ladder-field":
            return I.gen_ladder_field(self._even_half())
        if kind == "planar3r-field":
            return I.gen_planar3r_field(int(self.size), seed=seed)
        raise AssertionError(kind)


def rewire_count(instance: IsingInstance, frac: float) -> int:
    """Swaps needed to rewire ``frac`` of the edges (each swap moves two)."""
    if not 0 <= frac <= 1:
        raise InstanceError("rewire fraction must lie in [0, 1]")
    return int(round(frac * instance.num_edges / 2))
