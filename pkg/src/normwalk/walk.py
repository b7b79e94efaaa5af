"""Lattice random walk simulation with reproducible parallel replication.

Each replica's path is a pure function of (master_seed, replica_index):
streams come from counter-based Philox generators keyed by that pair, so
results are bit-identical regardless of worker count or scheduling order.

Paths are generated in vectorised chunks.  Observers consume (start index,
positions, norms) blocks instead of single steps; a block is never emitted
past the stopping time.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from numpy.random import Generator, Philox

from .errors import UsageError
from .norms import NormSpec

DEFAULT_CHUNK = 1 << 15
DEFAULT_SITE_BUDGET = 1 << 24
DEFAULT_MAX_STEPS = 10 ** 8  # safety valve for stop_radius-only runs


def replica_rng(master_seed: int, replica_index: int) -> Generator:
    """Philox stream keyed by (master_seed, replica_index); no jumping."""
    if master_seed < 0 or replica_index < 0:
        raise UsageError("seeds and replica indices must be nonnegative")
    key = np.array([master_seed, replica_index], dtype=np.uint64)
    return Generator(Philox(key=key))


def map_replicas(fn: Callable[[int], object], n_replicas: int,
                 threads: int = 1) -> list:
    """Evaluate fn(replica_index) for each replica; order-stable output.

    Replicas are independent by construction, so thread scheduling cannot
    change any result, only wall time.
    """
    if threads <= 1:
        return [fn(i) for i in range(n_replicas)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_replicas)))


@dataclass(frozen=True)
class StepDistribution:
    """Finite-support increment law with moment certificates."""

    dim: int
    support: np.ndarray        # (m, dim) int64
    probabilities: np.ndarray  # (m,) float, sums to 1

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=np.int64)
        p = np.asarray(self.probabilities, dtype=float)
        if sup.ndim != 2 or sup.shape[1] != self.dim:
            raise UsageError("support must be an (m, dim) integer array")
        if p.shape != (sup.shape[0],) or np.any(p < 0):
            raise UsageError("probabilities must be nonnegative, one per atom")
        if abs(p.sum() - 1.0) > 1e-12:
            raise UsageError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "probabilities", p)

    @property
    def mean(self) -> np.ndarray:
        return self.probabilities @ self.support.astype(float)

    @property
    def covariance(self) -> np.ndarray:
        x = self.support.astype(float)
        m = self.mean
        return ((x - m).T * self.probabilities) @ (x - m)

    @property
    def sigma2(self) -> float:
        return float(np.trace(self.covariance) / self.dim)

    @property
    def isotropy_deviation(self) -> float:
        """max |Q_ij - sigma^2 delta_ij|; 0 means exactly isotropic."""
        q = self.covariance
        return float(np.abs(q - self.sigma2 * np.eye(self.dim)).max())

    @property
    def uniform(self) -> bool:
        p = self.probabilities
        return bool(np.all(p == p[0]))

    def sampler(self, rng: Generator) -> Callable[[int], np.ndarray]:
        """Returns a function n -> (n, dim) int64 increments."""
        sup = self.support
        if self.uniform:
            m = sup.shape[0]

            def draw(n: int) -> np.ndarray:
                return sup[rng.integers(0, m, size=n)]
        else:
            cum = np.cumsum(self.probabilities)
            cum[-1] = 1.0

            def draw(n: int) -> np.ndarray:
                return sup[np.searchsorted(cum, rng.random(n), side="right")]
        return draw


def make_simple_walk(d: int) -> StepDistribution:
    """Uniform law on the 2d signed unit vectors; sigma^2 = 1/d exactly."""
    if d < 1:
        raise UsageError("d must be >= 1")
    sup = np.zeros((2 * d, d), dtype=np.int64)
    for i in range(d):
        sup[2 * i, i] = 1
        sup[2 * i + 1, i] = -1
    return StepDistribution(dim=d, support=sup,
                            probabilities=np.full(2 * d, 1.0 / (2 * d)))


def make_lazy_walk(d: int, stay_probability: float = 0.5) -> StepDistribution:
    """Simple walk that stays put with the given probability."""
    if not (0.0 <= stay_probability < 1.0):
        raise UsageError("stay_probability must lie in [0, 1)")
    base = make_simple_walk(d)
    sup = np.vstack([np.zeros((1, d), dtype=np.int64), base.support])
    move = (1.0 - stay_probability) / (2 * d)
    probs = np.concatenate([[stay_probability], np.full(2 * d, move)])
    return StepDistribution(dim=d, support=sup, probabilities=probs)


def check_a0(step: StepDistribution, tolerance: float = 0.0) -> bool:
    """Zero mean and isotropic covariance Q = sigma^2 I within tolerance."""
    if float(np.abs(step.mean).max()) > tolerance:
        return False
    if step.sigma2 <= 0:
        return False
    return step.isotropy_deviation <= tolerance


@dataclass(frozen=True)
class WalkRun:
    """One replica's configuration; (master_seed, replica_index) fixes the path."""

    step: StepDistribution
    master_seed: int
    replica_index: int = 0
    horizon: Optional[int] = None        # number of steps; None = until stop_radius
    stop_radius: Optional[int] = None    # stop once ||S_n|| >= stop_radius
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        if self.horizon is None and self.stop_radius is None:
            raise UsageError("need a horizon or a stop_radius")
        if self.horizon is not None and self.horizon < 1:
            raise UsageError("horizon must be >= 1")


@dataclass
class LocalTimeRecord:
    """Visit counts by norm level (dense) and by site (sparse, optional)."""

    level_counts: np.ndarray          # index k -> L^{||S||}_n(k), k >= 0
    n_effective: int
    truncated: bool                   # True when stop_radius fired first
    site_counts: Optional[dict] = None
    site_window: Optional[tuple] = None  # (0, n) window actually tracked

    def level(self, k: int) -> int:
        if k < len(self.level_counts):
            return int(self.level_counts[k])
        return 0

    def site(self, x: Sequence[int]) -> int:
        if self.site_counts is None:
            raise UsageError("site tracking was not enabled for this run")
        return self.site_counts.get(tuple(int(v) for v in x), 0)


class PartialSumObserver:
    """Accumulates sum f(||S_n||) and records it at given checkpoints."""

    def __init__(self, f: Callable[[np.ndarray], np.ndarray],
                 checkpoints: Sequence[int]):
        self.f = f
        self.checkpoints = sorted(int(c) for c in checkpoints)
        if self.checkpoints and self.checkpoints[0] < 1:
            raise UsageError("checkpoints must be >= 1")
        self.partials: dict[int, float] = {}
        self._total = 0.0

    def observe(self, n0: int, positions: np.ndarray, norms: np.ndarray) -> None:
        vals = np.asarray(self.f(norms), dtype=float)
        hits = [c for c in self.checkpoints
                if n0 <= c < n0 + len(norms) and c not in self.partials]
        if hits:
            csum = np.cumsum(vals)
            for c in hits:
                self.partials[c] = self._total + float(csum[c - n0])
        self._total += float(vals.sum())

    @property
    def total(self) -> float:
        return self._total


def simulate(run: WalkRun, norm: NormSpec,
             observers: Iterable = (),
             track_sites: bool = False,
             site_budget: int = DEFAULT_SITE_BUDGET,
             chunk: int = DEFAULT_CHUNK) -> LocalTimeRecord:
    """Generate one replica path, streaming blocks to observers.

    Runs for `horizon` steps or until ||S_n|| >= stop_radius, whichever
    comes first.  Level counts satisfy sum_k counts[k] = n_effective.
    """
    if norm.dim != run.step.dim:
        raise UsageError("norm and step distribution dimensions differ")
    rng = replica_rng(run.master_seed, run.replica_index)
    draw = run.step.sampler(rng)
    observers = list(observers)

    limit = run.horizon if run.horizon is not None else run.max_steps
    level_counts = np.zeros(64, dtype=np.int64)
    sites: Optional[dict] = {} if track_sites else None
    site_window_end: Optional[int] = None

    pos = np.zeros(run.step.dim, dtype=np.int64)
    n_done = 0
    truncated = False

    while n_done < limit:
        m = min(chunk, limit - n_done)
        block = np.cumsum(draw(m), axis=0)
        block += pos
        norms = norm.values(block)

        stop = m
        if run.stop_radius is not None:
            over = np.nonzero(norms >= run.stop_radius)[0]
            if over.size:
                stop = int(over[0]) + 1
                truncated = True
        block = block[:stop]
        norms = norms[:stop]

        top = int(norms.max(initial=0))
        if top >= len(level_counts):
            grown = np.zeros(max(top + 1, 2 * len(level_counts)), dtype=np.int64)
            grown[:len(level_counts)] = level_counts
            level_counts = grown
        level_counts += np.bincount(norms, minlength=len(level_counts))

        if sites is not None and site_window_end is None:
            uniq, cnt = np.unique(block, axis=0, return_counts=True)
            for row, c in zip(uniq, cnt):
                sites[tuple(int(v) for v in row)] = \
                    sites.get(tuple(int(v) for v in row), 0) + int(c)
            if len(sites) > site_budget:
                site_window_end = n_done + stop

        for obs in observers:
            obs.observe(n_done + 1, block, norms)

        pos = block[-1]
        n_done += stop
        if truncated:
            break

    window = None
    if sites is not None:
        window = (0, site_window_end if site_window_end is not None else n_done)
    return LocalTimeRecord(level_counts=level_counts, n_effective=n_done,
                           truncated=truncated, site_counts=sites,
                           site_window=window)


def truncated_f_sum(run: WalkRun, norm: NormSpec,
                    f: Callable[[np.ndarray], np.ndarray],
                    checkpoints: Sequence[int],
                    chunk: int = DEFAULT_CHUNK) -> dict[int, float]:
    """Partial sums sum_{n<=N} f(||S_n||) at each checkpoint N."""
    checkpoints = sorted(int(c) for c in checkpoints)
    if not checkpoints:
        raise UsageError("need at least one checkpoint")
    obs = PartialSumObserver(f, checkpoints)
    horizon = max(checkpoints)
    run = WalkRun(step=run.step, master_seed=run.master_seed,
                  replica_index=run.replica_index, horizon=horizon,
                  stop_radius=run.stop_radius, max_steps=run.max_steps)
    simulate(run, norm, observers=[obs], chunk=chunk)
    out = dict(obs.partials)
    for c in checkpoints:  # checkpoints past an early stop hold the final sum
        out.setdefault(c, obs.total)
    return out


# -- truncated total local times and hitting statistics --------------------


def truncation_bias_bound(norm: NormSpec, k: int, k_cut: int) -> float:
    """Heuristic relative bias of stopping level-k visit counts at k_cut.

    After exiting norm-radius k_cut the walk sits at Euclidean distance
    >= k_cut * r_min; by the |x|^{2-d} Green decay its expected future
    level-k visits are at most ((k r_max)/(k_cut r_min))^{d-2} times the
    total.  This uses the asymptotic decay rate, not a rigorous constant.
    """
    lo, hi = norm.euclid_range_on_unit_sphere()
    d = norm.dim
    return float(((k * hi) / (k_cut * lo)) ** (d - 2))


@dataclass(frozen=True)
class LevelLocalTimeSample:
    """Replicated truncated samples of the total level-k local time."""

    k: int
    k_cut: int
    samples: np.ndarray  # int64, one per replica
    bias_bound: float    # relative, from truncation_bias_bound

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def std_error(self) -> float:
        n = len(self.samples)
        return float(self.samples.std(ddof=1) / np.sqrt(n)) if n > 1 else np.inf


def _exit_scale_chunk(k_cut: int) -> int:
    """Chunk sized to the diffusive exit time of radius k_cut."""
    return int(min(max(2048, 2 * k_cut * k_cut), 1 << 17))


def total_level_local_time(step: StepDistribution, norm: NormSpec, k: int,
                           replicas: int, master_seed: int,
                           k_cut: Optional[int] = None,
                           threads: int = 1,
                           chunk: Optional[int] = None) -> LevelLocalTimeSample:
    """Visit counts to norm level k before first exceeding k_cut.

    Requires d >= 3 (transient regime) and k_cut >= 2k; default k_cut = 8k.
    """
    if norm.dim < 3:
        raise UsageError("total local times require d >= 3 (transient walk)")
    if k < 1:
        raise UsageError("k must be >= 1")
    if k_cut is None:
        k_cut = 8 * k
    if k_cut < 2 * k:
        raise UsageError(f"k_cut = {k_cut} < 2k leaves the truncation bias uncontrolled")
    if chunk is None:
        chunk = _exit_scale_chunk(k_cut)

    def one(i: int) -> int:
        run = WalkRun(step=step, master_seed=master_seed, replica_index=i,
                      stop_radius=k_cut)
        rec = simulate(run, norm, chunk=chunk)
        return rec.level(k)

    vals = np.array(map_replicas(one, replicas, threads=threads), dtype=np.int64)
    return LevelLocalTimeSample(k=k, k_cut=k_cut, samples=vals,
                                bias_bound=truncation_bias_bound(norm, k, k_cut))


def site_visit_samples(step: StepDistribution, norm: NormSpec,
                       x: Sequence[int], replicas: int, master_seed: int,
                       k_cut: int, threads: int = 1,
                       chunk: Optional[int] = None) -> np.ndarray:
    """Per-replica visit counts to the site x before exiting k_cut."""
    if norm.dim < 3:
        raise UsageError("total local times require d >= 3 (transient walk)")
    target = np.asarray(x, dtype=np.int64)
    if target.shape != (step.dim,):
        raise UsageError("x must be a lattice point of the walk's dimension")
    if chunk is None:
        chunk = _exit_scale_chunk(k_cut)
    norm_x = norm.value([int(v) for v in target])

    def one(i: int) -> int:
        rng = replica_rng(master_seed, i)
        draw = step.sampler(rng)
        pos = np.zeros(step.dim, dtype=np.int64)
        visits = 0
        done = 0
        while done < DEFAULT_MAX_STEPS:
            block = np.cumsum(draw(chunk), axis=0)
            block += pos
            norms = norm.values(block)
            over = np.nonzero(norms >= k_cut)[0]
            stop = int(over[0]) + 1 if over.size else chunk
            if norm_x < k_cut:  # a site at/past the cut is never reached pre-exit
                visits += int(np.all(block[:stop] == target, axis=1).sum())
            if over.size:
                return visits
            pos = block[-1]
            done += chunk
        raise UsageError("walk failed to exit k_cut within the step budget")

    return np.array(map_replicas(one, replicas, threads=threads), dtype=np.int64)


@dataclass(frozen=True)
class HittingEstimate:
    x: tuple
    k_cut: int
    replicas: int
    p_hat: float
    std_error: float
    undercovered: bool  # x too close to (or past) the truncation radius

    def agrees_with(self, other: float, n_sigma: float = 3.0) -> bool:
        return abs(self.p_hat - other) <= n_sigma * self.std_error


def hitting_probability(step: StepDistribution, norm: NormSpec,
                        x: Sequence[int], replicas: int, master_seed: int,
                        k_cut: Optional[int] = None,
                        threads: int = 1) -> HittingEstimate:
    """P(T_x < infinity) estimated by the fraction of replicas hitting x
    before exiting norm-radius k_cut; default k_cut = 4||x|| + 4."""
    target = tuple(int(v) for v in x)
    norm_x = norm.value(target)
    if k_cut is None:
        k_cut = 4 * norm_x + 4
    visits = site_visit_samples(step, norm, target, replicas, master_seed,
                                k_cut=k_cut, threads=threads)
    hits = visits >= 1
    p = float(hits.mean())
    se = float(np.sqrt(max(p * (1 - p), 1e-12) / replicas))
    return HittingEstimate(x=target, k_cut=k_cut, replicas=replicas,
                           p_hat=p, std_error=se,
                           undercovered=bool(norm_x * 2 >= k_cut))


def geometric_tail_report(visits: np.ndarray, n_max: int = 5) -> list[dict]:
    """Empirical tail P(L >= n) with conditional ratio estimates.

    Ratio of successive tails estimates the return probability p(0); the
    standard error treats count(n+1) | count(n) as binomial.
    """
    out = []
    r = len(visits)
    for n in range(1, n_max + 1):
        c_n = int((visits >= n).sum())
        c_next = int((visits >= n + 1).sum())
        tail = c_n / r
        if c_n > 0:
            ratio = c_next / c_n
            ratio_se = float(np.sqrt(max(ratio * (1 - ratio), 1e-12) / c_n))
        else:
            ratio, ratio_se = float("nan"), float("inf")
        out.append({"n": n, "tail": tail, "count": c_n,
                    "ratio": ratio, "ratio_se": ratio_se})
    return out
