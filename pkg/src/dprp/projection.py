"""Random projection matrices shared through a seed.

A projection is described by a :class:`ProjectionSpec`.  Only the first ``r``
rows of the conceptual ``d x d`` matrix are drawn (row selection is what the
rectangular diagonal selector does anyway), so draws are *not* the first rows
of a hypothetical full-matrix draw with the same seed.

Entries keep their raw law (unit variance); the ``1/sqrt(r)`` normalization is
applied by :func:`project` and :func:`back_project`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import derive_seed, make_rng


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class DistributionKind:
    """Entry law of the projection matrix.

    ``name`` is one of ``"rademacher"``, ``"gaussian"``, ``"achlioptas"`` or
    ``"identity"``.  The last is a debug projection with rows ``sqrt(r) * e_k``
    so that ``U_r^T U_r = r I`` holds exactly when ``r == d``.
    """

    name: str
    s: int = 1

    def __post_init__(self):
        if self.name not in _SAMPLERS:
            raise ValueError(f"unknown distribution kind {self.name!r}")
        if self.s < 1:
            raise ValueError("sparsity s must be >= 1")
        if self.name != "achlioptas" and self.s != 1:
            raise ValueError(f"{self.name} has no sparsity parameter")

    @property
    def sparsity(self) -> int:
        """Sparsity used by the bounds (1 for Rademacher and Gaussian)."""
        return self.s

    def __str__(self) -> str:
        return f"achlioptas:{self.s}" if self.name == "achlioptas" else self.name


def rademacher() -> DistributionKind:
    return DistributionKind("rademacher")


def gaussian() -> DistributionKind:
    return DistributionKind("gaussian")


def achlioptas(s: int) -> DistributionKind:
    return DistributionKind("achlioptas", int(s))


def parse_kind(text: str | DistributionKind) -> DistributionKind:
    """Parse ``"rademacher"``, ``"gaussian"``, ``"identity"`` or ``"achlioptas:<s>"``."""
    if isinstance(text, DistributionKind):
        return text
    name, _, arg = str(text).strip().lower().partition(":")
    if name == "achlioptas":
        if not arg:
            raise ValueError("achlioptas needs a sparsity, e.g. 'achlioptas:2'")
        return achlioptas(int(arg))
    if arg:
        raise ValueError(f"{name} takes no parameter")
    return DistributionKind(name)


def _rademacher(rng, size, s):
    return rng.integers(0, 2, size=size, dtype=np.int8).astype(np.float64) * 2.0 - 1.0


def _gaussian(rng, size, s):
    return rng.standard_normal(size)


def _achlioptas(rng, size, s):
    u = rng.random(size)
    root = math.sqrt(s)
    half = 1.0 / (2 * s)
    out = np.zeros(size)
    out[u < half] = root
    out[u >= 1.0 - half] = -root
    return out


_SAMPLERS = {
    "rademacher": _rademacher,
    "gaussian": _gaussian,
    "achlioptas": _achlioptas,
    "identity": None,
}


def sample_entries(kind: DistributionKind, size, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. entries of the given law; ``size`` may have any shape.

    Used for single matrices and for batched Monte Carlo draws alike.
    """
    sampler = _SAMPLERS[kind.name]
    if sampler is None:
        raise ValueError("the identity projection is deterministic")
    return sampler(rng, size, kind.s)


@dataclass(frozen=True)
class ProjectionSpec:
    kind: DistributionKind
    d: int
    r: int
    seed: int

    def __post_init__(self):
        if self.d < 1:
            raise DimensionError(f"d must be positive, got {self.d}")
        if not 1 <= self.r <= self.d:
            raise DimensionError(f"need 1 <= r <= d, got r={self.r}, d={self.d}")


@dataclass(frozen=True)
class ProjectionMatrix:
    spec: ProjectionSpec
    rows: np.ndarray = field(repr=False)

    @property
    def r(self) -> int:
        return self.spec.r

    @property
    def d(self) -> int:
        return self.spec.d

    def gram(self) -> np.ndarray:
        """``U_r^T U_r`` (d x d); expectation is ``r I``."""
        return self.rows.T @ self.rows


def generate(spec: ProjectionSpec) -> ProjectionMatrix:
    """Draw the ``r x d`` matrix; a pure function of ``(kind, d, r, seed)``."""
    if spec.kind.name == "identity":
        rows = np.zeros((spec.r, spec.d))
        rows[np.arange(spec.r), np.arange(spec.r)] = math.sqrt(spec.r)
    else:
        rows = sample_entries(spec.kind, (spec.r, spec.d), make_rng(spec.seed))
    rows.setflags(write=False)
    return ProjectionMatrix(spec, rows)


def round_spec(kind: DistributionKind, d: int, r: int, root_seed: int, t: int) -> ProjectionSpec:
    """Spec of the matrix used in round ``t``: seed ``derive_seed(root, "rpm", t)``."""
    return ProjectionSpec(kind, d, r, derive_seed(root_seed, "rpm", t))


def project(m: ProjectionMatrix, g) -> np.ndarray:
    """Client-side compression ``z = U_r g / sqrt(r)``."""
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (m.d,):
        raise DimensionError(f"expected a {m.d}-vector, got shape {g.shape}")
    return (m.rows @ g) / math.sqrt(m.r)


def back_project(m: ProjectionMatrix, y) -> np.ndarray:
    """Server-side lift ``U_r^T y / sqrt(r)`` back to the model dimension."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (m.r,):
        raise DimensionError(f"expected a {m.r}-vector, got shape {y.shape}")
    return (m.rows.T @ y) / math.sqrt(m.r)
