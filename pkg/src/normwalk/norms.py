"""Integer-valued polytope norms on the lattice.

Four families are supported, each taking integer values on integer points:

* ``max``        -- max_i |x^i|
* ``l1``         -- sum_i |x^i|
* ``w1``         -- sum_i i*|x^i|  (coordinate i carries weight i)
* ``scaled_max`` -- factor * max_i |x^i|  (degenerate: empty odd levels)

Any family may be composed with a unimodular integer matrix A, giving
``x -> base_norm(A x)``.  Unimodularity (|det A| = 1) makes A a lattice
bijection, so sphere counts are preserved.

Scalar evaluation uses exact Python integer arithmetic; the vectorised
paths use int64, which is exact for the coordinate ranges reachable by
the walk and census machinery here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import UsageError

FAMILIES = ("max", "l1", "w1", "scaled_max")

# Families for which the equidistributed-partition assumption is asserted
# (it is not verified algorithmically; see module docs).
A3_FAMILIES = frozenset({"max", "l1", "w1"})


def exact_det(matrix: Sequence[Sequence[int]]) -> int:
    """Exact integer determinant (fraction-free Bareiss elimination)."""
    a = [[int(v) for v in row] for row in matrix]
    n = len(a)
    if any(len(row) != n for row in a):
        raise UsageError("determinant requires a square matrix")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[-1][-1]


def validate_unimodular(matrix: Sequence[Sequence[int]]) -> bool:
    """True iff the matrix is square, integer, and has determinant +-1."""
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        return False
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.round(arr)):
            return False
    return abs(exact_det(arr.astype(object).tolist())) == 1


def integer_inverse(matrix: np.ndarray) -> np.ndarray:
    """Exact inverse of a unimodular integer matrix (adjugate / det)."""
    m = [[int(v) for v in row] for row in matrix]
    n = len(m)
    det = exact_det(m)
    if abs(det) != 1:
        raise UsageError("integer inverse requires |det| = 1, got %d" % det)
    inv = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:i] + row[i + 1:] for k, row in enumerate(m) if k != j]
            cof = exact_det(minor) if minor else 1
            inv[i][j] = (-1) ** (i + j) * cof * det  # det = 1/det for +-1
    return np.array(inv, dtype=np.int64)


@dataclass(frozen=True)
class NormSpec:
    """A lattice norm: base family, dimension, optional unimodular transform.

    ``factor`` is only meaningful for the scaled_max family.  The transform,
    when present, is validated at construction (fail fast).
    """

    family: str
    dim: int
    factor: int = 1
    transform: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown norm family {self.family!r}; expected one of {FAMILIES}")
        if self.dim < 1:
            raise UsageError("dim must be >= 1")
        if self.family == "scaled_max":
            if self.factor < 1:
                raise UsageError("scaled_max factor must be a positive integer")
        elif self.factor != 1:
            raise UsageError("factor is only supported for scaled_max")
        if self.transform is not None:
            arr = np.asarray(self.transform)
            if arr.shape != (self.dim, self.dim):
                raise UsageError(f"transform must be {self.dim}x{self.dim}, got {arr.shape}")
            if not np.issubdtype(arr.dtype, np.integer):
                if np.all(arr == np.round(arr)):
                    arr = arr.astype(np.int64)
                else:
                    raise UsageError("transform entries must be integers")
            if not validate_unimodular(arr):
                raise UsageError("transform must be unimodular (|det| = 1)")
            object.__setattr__(self, "transform", arr.astype(np.int64))

    # frozen dataclass with ndarray field: compare/hash by content description
    def __eq__(self, other):
        if not isinstance(other, NormSpec):
            return NotImplemented
        return self.describe() == other.describe()

    def __hash__(self):
        return hash(json.dumps(self.describe(), sort_keys=True))

    @property
    def degenerate(self) -> bool:
        """True when the norm has empty levels (scaled_max with factor > 1)."""
        return self.family == "scaled_max" and self.factor > 1

    @property
    def a3_asserted(self) -> bool:
        """Equidistributed-partition assumption asserted for this family."""
        return self.family in A3_FAMILIES

    @property
    def weights(self) -> np.ndarray:
        if self.family == "w1":
            return np.arange(1, self.dim + 1, dtype=np.int64)
        return np.ones(self.dim, dtype=np.int64)

    # -- evaluation -------------------------------------------------------

    def _apply_transform_exact(self, x: Sequence[int]) -> list:
        if self.transform is None:
            return [int(v) for v in x]
        rows = self.transform.tolist()
        return [sum(int(a) * int(v) for a, v in zip(row, x)) for row in rows]

    def value(self, x: Sequence[int]) -> int:
        """Exact integer norm of a lattice point."""
        x = list(x)
        if len(x) != self.dim:
            raise UsageError(f"point has dim {len(x)}, norm expects {self.dim}")
        y = self._apply_transform_exact(x)
        if self.family == "l1":
            return sum(abs(v) for v in y)
        if self.family == "w1":
            return sum(i * abs(v) for i, v in enumerate(y, start=1))
        m = max((abs(v) for v in y), default=0)
        if self.family == "scaled_max":
            return self.factor * m
        return m

    def values(self, points: np.ndarray) -> np.ndarray:
        """Vectorised norm of an (n, dim) int array; returns int64 array."""
        pts = np.asarray(points)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[1] != self.dim:
            raise UsageError(f"points have dim {pts.shape[1]}, norm expects {self.dim}")
        y = pts.astype(np.int64)
        if self.transform is not None:
            y = y @ self.transform.T.astype(np.int64)
        a = np.abs(y)
        if self.family == "l1":
            return a.sum(axis=1)
        if self.family == "w1":
            return a @ self.weights
        m = a.max(axis=1)
        if self.family == "scaled_max":
            return self.factor * m
        return m

    def value_real(self, x: Sequence[float]) -> float:
        """Norm of a real vector (positively homogeneous extension)."""
        v = np.asarray(x, dtype=float)
        if v.shape != (self.dim,):
            raise UsageError(f"point has shape {v.shape}, norm expects ({self.dim},)")
        if self.transform is not None:
            v = self.transform.astype(float) @ v
        a = np.abs(v)
        if self.family == "l1":
            return float(a.sum())
        if self.family == "w1":
            return float(a @ np.arange(1, self.dim + 1))
        m = float(a.max()) if a.size else 0.0
        if self.family == "scaled_max":
            return self.factor * m
        return m

    def values_real(self, points: np.ndarray) -> np.ndarray:
        """Vectorised real norm of an (n, dim) float array."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        y = pts
        if self.transform is not None:
            y = y @ self.transform.T.astype(float)
        a = np.abs(y)
        if self.family == "l1":
            return a.sum(axis=1)
        if self.family == "w1":
            return a @ np.arange(1, self.dim + 1, dtype=float)
        m = a.max(axis=1)
        if self.family == "scaled_max":
            return self.factor * m
        return m

    # -- geometry ---------------------------------------------------------

    def enclosing_box_radius(self, k: int) -> int:
        """R such that every lattice x with ||x|| <= k has max-norm <= R.

        All base families dominate the max norm coordinatewise, so the base
        ball of radius k sits in the cube of radius k (k // factor for
        scaled_max).  A transform A maps the ball to A^{-1}(base ball), and
        ||A^{-1} y||_inf <= (max abs row sum of A^{-1}) * ||y||_inf.
        """
        base = k // self.factor if self.family == "scaled_max" else k
        if self.transform is None:
            return base
        inv = integer_inverse(self.transform)
        row_sum = int(np.abs(inv).sum(axis=1).max())
        return base * row_sum

    def euclid_range_on_unit_sphere(self) -> tuple[float, float]:
        """(min, max) Euclidean length over the unit ball boundary.

        Cheap norm-equivalence certificate used in truncation-bias bounds.
        For the built-in untransformed families these are exact.
        """
        d = self.dim
        if self.transform is not None:
            # conservative: estimate from sampled lattice directions
            rng = np.random.default_rng(0)
            dirs = rng.integers(-3, 4, size=(512, d))
            dirs = dirs[np.any(dirs != 0, axis=1)]
            nv = self.values(dirs).astype(float)
            ev = np.sqrt((dirs.astype(float) ** 2).sum(axis=1))
            r = ev / nv
            return float(r.min()), float(r.max())
        if self.family in ("max", "scaled_max"):
            lo, hi = 1.0, float(np.sqrt(d))
            return lo / self.factor, hi / self.factor
        if self.family == "l1":
            return 1.0 / np.sqrt(d), 1.0
        # w1: euclid minimised at e_d/d, maximised at e_1
        return 1.0 / d, 1.0

    # -- serialisation ----------------------------------------------------

    def describe(self) -> dict:
        out = {"family": self.family, "dim": self.dim}
        if self.family == "scaled_max":
            out["factor"] = self.factor
        if self.transform is not None:
            out["transform"] = [int(v) for v in self.transform.ravel()]
        return out

    def to_json(self) -> str:
        return json.dumps(self.describe(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NormSpec":
        obj = json.loads(text) if isinstance(text, str) else dict(text)
        dim = int(obj["dim"])
        transform = None
        if obj.get("transform") is not None:
            flat = [int(v) for v in obj["transform"]]
            if len(flat) != dim * dim:
                raise UsageError("transform must be a row-major dim*dim array")
            transform = np.array(flat, dtype=np.int64).reshape(dim, dim)
        return cls(family=obj["family"], dim=dim,
                   factor=int(obj.get("factor", 1)), transform=transform)


def make_norm(family: str, dim: int, factor: int = 1,
              transform: Optional[Sequence[Sequence[int]]] = None) -> NormSpec:
    t = None if transform is None else np.asarray(transform)
    return NormSpec(family=family, dim=dim, factor=factor, transform=t)


def verify_a1(spec: NormSpec, box_radius: int) -> tuple[bool, Optional[tuple]]:
    """Check integer-valuedness on the cube of the given radius.

    Returns (True, None) or (False, first offending point).  Trivially true
    for the built-in families; the check matters once user matrices compose
    (construction already rejects non-integer entries, so this doubles as a
    regression guard).
    """
    if box_radius < 1:
        raise UsageError("box_radius must be >= 1")
    for slab in iter_box_slabs(spec.dim, box_radius):
        real = spec.values_real(slab.astype(float))
        exact = spec.values(slab).astype(float)
        bad = np.nonzero(np.abs(real - exact) > 1e-9 * np.maximum(1.0, exact))[0]
        if bad.size:
            return False, tuple(int(v) for v in slab[bad[0]])
    return True, None


def iter_box_slabs(dim: int, radius: int, max_chunk: int = 1 << 20) -> Iterator[np.ndarray]:
    """Yield the lattice cube [-radius, radius]^dim in coordinate slabs.

    Slabs are sliced along the first coordinate so peak memory stays below
    max_chunk points; iteration order is deterministic.
    """
    side = 2 * radius + 1
    per_slab = side ** (dim - 1)
    if dim == 1:
        yield np.arange(-radius, radius + 1, dtype=np.int64)[:, None]
        return
    axes = [np.arange(-radius, radius + 1, dtype=np.int64)] * (dim - 1)
    rest = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim - 1)
    first_per_chunk = max(1, max_chunk // per_slab)
    firsts = np.arange(-radius, radius + 1, dtype=np.int64)
    for i in range(0, side, first_per_chunk):
        chunk_firsts = firsts[i:i + first_per_chunk]
        m = chunk_firsts.size
        block = np.empty((m * per_slab, dim), dtype=np.int64)
        block[:, 0] = np.repeat(chunk_firsts, per_slab)
        block[:, 1:] = np.tile(rest, (m, 1))
        yield block


def _cube_shell(dim: int, k: int) -> np.ndarray:
    """Points with max-norm exactly k, each listed once.

    Point x belongs to axis i when |x^i| = k and |x^j| < k for j < i; the
    cells are disjoint and their sizes telescope to (2k+1)^d - (2k-1)^d.
    """
    parts = []
    for i in range(dim):
        lo = [np.arange(-(k - 1), k, dtype=np.int64)] * i
        hi = [np.arange(-k, k + 1, dtype=np.int64)] * (dim - i - 1)
        for sign in (k, -k):
            axes = lo + [np.array([sign], dtype=np.int64)] + hi
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
            parts.append(grid.reshape(-1, dim))
    return np.concatenate(parts, axis=0)


def sphere_points(spec: NormSpec, k: int, max_chunk: int = 1 << 20) -> np.ndarray:
    """All lattice points with exact norm k."""
    if k == 0:
        return np.zeros((1, spec.dim), dtype=np.int64)
    if spec.transform is None and spec.family in ("max", "scaled_max"):
        if k % spec.factor != 0:
            return np.zeros((0, spec.dim), dtype=np.int64)
        return _cube_shell(spec.dim, k // spec.factor)
    radius = spec.enclosing_box_radius(k)
    hits = []
    for slab in iter_box_slabs(spec.dim, radius, max_chunk=max_chunk):
        nv = spec.values(slab)
        sel = slab[nv == k]
        if sel.size:
            hits.append(sel)
    if not hits:
        return np.zeros((0, spec.dim), dtype=np.int64)
    return np.concatenate(hits, axis=0)
