"""Sphere censuses: N(k) = #{x in Z^d : ||x|| = k}.

Counts are computed by independent routes -- brute-force box enumeration
(the oracle), family-specific closed forms, and convolution recursions --
and kept as exact Python integers.  The module also carries the k^{d-1}
asymptotics of each family and the eventual-monotonicity / growth-bound
checks that the summability criteria rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ResourceError, UsageError
from .norms import NormSpec, iter_box_slabs

# Refuse brute-force boxes beyond this many points unless the caller raises it.
DEFAULT_BOX_BUDGET = 200_000_000


@dataclass(frozen=True)
class SphereCensus:
    """Exact table k -> N(k) for k = 0..k_max, with provenance."""

    spec: NormSpec
    counts: tuple
    method: str  # "bruteforce" | "closed" | "recursive"

    def __post_init__(self):
        if not self.counts or self.counts[0] != 1:
            raise UsageError("census must start with N(0) = 1")
        if any(c < 0 for c in self.counts):
            raise UsageError("census counts must be nonnegative")

    @property
    def k_max(self) -> int:
        return len(self.counts) - 1

    def __getitem__(self, k: int) -> int:
        return self.counts[k]

    def cumulative(self) -> list:
        out, acc = [], 0
        for c in self.counts:
            acc += c
            out.append(acc)
        return out


def count_bruteforce(spec: NormSpec, k_max: int,
                     box_budget: int = DEFAULT_BOX_BUDGET) -> SphereCensus:
    """Oracle census by enumerating the enclosing box and binning norms."""
    if k_max < 0:
        raise UsageError("k_max must be >= 0")
    radius = spec.enclosing_box_radius(k_max)
    n_points = (2 * radius + 1) ** spec.dim
    if n_points > box_budget:
        raise ResourceError(
            f"brute-force box radius {radius} holds {n_points} points, "
            f"over budget {box_budget}")
    counts = np.zeros(k_max + 1, dtype=np.int64)
    for slab in iter_box_slabs(spec.dim, radius):
        nv = spec.values(slab)
        nv = nv[nv <= k_max]
        counts += np.bincount(nv, minlength=k_max + 1)[:k_max + 1]
    return SphereCensus(spec=spec, counts=tuple(int(c) for c in counts),
                        method="bruteforce")


def count_max_closed(d: int, k: int) -> int:
    """Cube-shell count (2k+1)^d - (2k-1)^d, with N(0) = 1."""
    if d < 1 or k < 0:
        raise UsageError("need d >= 1 and k >= 0")
    if k == 0:
        return 1
    return (2 * k + 1) ** d - (2 * k - 1) ** d


def census_max_closed(d: int, k_max: int) -> SphereCensus:
    counts = tuple(count_max_closed(d, k) for k in range(k_max + 1))
    return SphereCensus(spec=NormSpec("max", d), counts=counts, method="closed")


def _n1_table(k_max: int) -> list:
    # one-dimensional table: 1, 2, 2, 2, ...
    return [1] + [2] * k_max


def count_l1_recursive(d: int, k_max: int) -> SphereCensus:
    """l1 census via the convolution recursion over dimensions."""
    if d < 1 or k_max < 0:
        raise UsageError("need d >= 1 and k_max >= 0")
    base = _n1_table(k_max)
    table = base[:]
    for _ in range(d - 1):
        table = [sum(base[j] * table[k - j] for j in range(k + 1))
                 for k in range(k_max + 1)]
    return SphereCensus(spec=NormSpec("l1", d), counts=tuple(table),
                        method="recursive")


def count_w1_recursive(d: int, k_max: int) -> SphereCensus:
    """Weighted-l1 census; the top coordinate contributes in strides of d."""
    if d < 1 or k_max < 0:
        raise UsageError("need d >= 1 and k_max >= 0")
    base = _n1_table(k_max)
    table = base[:]
    for dim in range(2, d + 1):
        table = [sum(base[j] * table[k - dim * j]
                     for j in range(k // dim + 1))
                 for k in range(k_max + 1)]
    return SphereCensus(spec=NormSpec("w1", d), counts=tuple(table),
                        method="recursive")


def census_for(spec: NormSpec, k_max: int, method: str = "auto",
               box_budget: int = DEFAULT_BOX_BUDGET) -> SphereCensus:
    """Best available census for a spec.

    "auto" prefers the closed form / recursion for the untransformed base
    families and falls back to brute force otherwise.  Transformed norms
    share the base family's counts (unimodular maps are lattice bijections),
    which auto exploits; pass method="bruteforce" to recount explicitly.
    """
    if method == "bruteforce":
        return count_bruteforce(spec, k_max, box_budget=box_budget)
    if method not in ("auto", "fast"):
        raise UsageError(f"unknown census method {method!r}")
    if spec.family == "max":
        base = census_max_closed(spec.dim, k_max)
    elif spec.family == "l1":
        base = count_l1_recursive(spec.dim, k_max)
    elif spec.family == "w1":
        base = count_w1_recursive(spec.dim, k_max)
    else:  # scaled_max
        inner = census_max_closed(spec.dim, k_max // spec.factor)
        counts = tuple(inner[k // spec.factor] if k % spec.factor == 0 else 0
                       for k in range(k_max + 1))
        return SphereCensus(spec=spec, counts=counts, method="closed")
    if spec.transform is None:
        return base
    return SphereCensus(spec=spec, counts=base.counts, method=base.method)


def gf_residual_l1(d: int, s: float, k_cap: int) -> float:
    """|sum_{k<=K} s^k N1^{(d)}(k) - ((1+s)/(1-s))^d| for 0 < s < 1."""
    if not (0.0 < s < 1.0):
        raise UsageError("s must lie in (0, 1)")
    census = count_l1_recursive(d, k_cap)
    partial = sum(c * s ** k for k, c in enumerate(census.counts))
    target = ((1.0 + s) / (1.0 - s)) ** d
    return abs(partial - target)


def asymptotic_constant(family: str, d: int) -> Fraction:
    """Exact constant c with N(k) ~ c k^{d-1} for the base families."""
    if d < 1:
        raise UsageError("d must be >= 1")
    if family == "max":
        return Fraction(d * 2 ** d)
    if family == "l1":
        num = 2 ** d
        den = 1
        for i in range(1, d):
            den *= i
        return Fraction(num, den)
    if family == "w1":
        a = Fraction(2)
        for dim in range(2, d + 1):
            a = a * 2 / (dim * (dim - 1))
        return a
    raise UsageError(
        f"no asymptotic constant for family {family!r} (transforms and "
        "scaled_max are unsupported)")


def check_a4(census: SphereCensus, k0: int) -> bool:
    """True iff N(k) is non-decreasing for k in [k0, k_max]."""
    if k0 < 0 or k0 > census.k_max:
        raise UsageError("k0 must lie inside the census table")
    tail = census.counts[k0:]
    return all(a <= b for a, b in zip(tail, tail[1:]))


def growth_bounds(census: SphereCensus) -> tuple[float, float]:
    """Tightest empirical (c1, c2) with c1 k^{d-1} <= N(k) <= c2 k^{d-1}.

    Requires every count for k >= 1 to be positive; degenerate censuses
    (empty levels) are rejected naming the first offending k.
    """
    if census.k_max < 1:
        raise UsageError("census must cover some k >= 1")
    d = census.spec.dim
    ratios = []
    for k in range(1, census.k_max + 1):
        c = census.counts[k]
        if c == 0:
            raise UsageError(f"census has N({k}) = 0; growth bounds undefined")
        ratios.append(c / k ** (d - 1))
    return min(ratios), max(ratios)


def verify_oracle_equivalence(dims: Sequence[int] = (2, 3, 4), k_max: int = 15,
                              extra_specs: Sequence[NormSpec] = ()) -> list:
    """Cross-check fast counts against brute force; returns mismatch list.

    Covers max / l1 / w1 for each dim, plus any extra specs (e.g. a
    unimodular transform).  An empty return value means full agreement.
    """
    mismatches = []
    jobs = [NormSpec(fam, d) for d in dims for fam in ("max", "l1", "w1")]
    jobs.extend(extra_specs)
    for spec in jobs:
        fast = census_for(spec, k_max)
        brute = count_bruteforce(spec, k_max)
        if fast.counts != brute.counts:
            bad = next(k for k in range(k_max + 1)
                       if fast.counts[k] != brute.counts[k])
            mismatches.append((spec.describe(), bad, fast.counts[bad],
                               brute.counts[bad]))
    return mismatches
