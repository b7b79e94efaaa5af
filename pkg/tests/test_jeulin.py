import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from normwalk.errors import UsageError
from normwalk.jeulin import (
    StableSampler,
    bernoulli_non_unifiable,
    bernoulli_scenario,
    harmonic,
    laplace_check,
    limit_jeulin_harness,
    route_a_scenario,
    sample_stable,
    shiga3_run,
    shiga3_scenario,
    shiga5_density,
    shiga5_phi_integral,
    shiga5_run,
)
from normwalk.measures import ks_statistic
from normwalk.summability import PowerLaw, Verdict
from normwalk.walk import replica_rng


class TestStableSampler:
    def test_domain_gates(self):
        rng = replica_rng(0, 0)
        with pytest.raises(UsageError):
            sample_stable(1.0, 1.0, rng)
        with pytest.raises(UsageError):
            sample_stable(0.0, 1.0, rng)
        with pytest.raises(UsageError):
            sample_stable(0.5, 0.0, rng)

    def test_strictly_positive(self):
        v = sample_stable(0.3, 1.0, replica_rng(1, 0), 200_000)
        assert (v > 0).all()

    def test_laplace_transform_grid(self):
        for alpha in (0.3, 0.5):
            rows = laplace_check(alpha, [0.5, 1.0, 2.0], draws=100_000,
                                 master_seed=8)
            assert all(abs(r["z"]) <= 3.0 for r in rows)

    def test_lambda_zero_exact(self):
        row = laplace_check(0.5, [0.0], draws=10_000, master_seed=1)[0]
        assert row["empirical"] == 1.0 and row["target"] == 1.0

    def test_draw_floor(self):
        with pytest.raises(UsageError):
            laplace_check(0.5, [1.0], draws=100)

    def test_scaling_law_in_distribution(self):
        # scale-t draws match t^{1/alpha} times unit draws
        alpha, t = 0.5, 3.0
        a = sample_stable(alpha, t, replica_rng(2, 0), 40_000)
        b = t ** (1 / alpha) * sample_stable(alpha, 1.0, replica_rng(2, 1),
                                             40_000)
        assert ks_statistic(a, b) < 0.015

    def test_against_scipy_parametrisation(self):
        # independent oracle: S(alpha, beta=1) with scale cos(pi a/2)^{1/a}
        alpha = 0.5
        sc = math.cos(math.pi * alpha / 2) ** (1 / alpha)
        oracle = stats.levy_stable.rvs(alpha, 1.0, loc=0.0, scale=sc,
                                       size=40_000, random_state=11)
        mine = sample_stable(alpha, 1.0, replica_rng(3, 0), 40_000)
        assert ks_statistic(oracle, mine) < 0.015

    def test_sampler_object(self):
        s = StableSampler(alpha=0.4, t=2.0)
        v = s.draw(replica_rng(4, 0), 1000)
        assert v.shape == (1000,) and (v > 0).all()


class TestShiga3:
    def test_alpha_gate(self):
        with pytest.raises(UsageError):
            shiga3_run(0.5, [10], 10, 0)
        with pytest.raises(UsageError):
            shiga3_run(0.6, [10], 10, 0)

    def test_series_side_converges_under_zeta_bound(self):
        rep = shiga3_run(0.4, [100], replicas=200, master_seed=1)
        assert rep.weighted_series_partial < rep.weighted_series_bound
        assert rep.weighted_series_bound == pytest.approx(2.612, abs=0.01)

    def test_laplace_functional_exact_product(self):
        rep = shiga3_run(0.4, [100, 1000], replicas=20_000, master_seed=9)
        assert rep.laplace_rows[0]["target"] == \
            pytest.approx(math.exp(-harmonic(100)), rel=1e-12)
        assert rep.laplace_rows[0]["target"] == pytest.approx(0.00559, abs=5e-5)
        assert rep.laplace_consistent

    def test_divergence_fractions_increase(self):
        rep = shiga3_run(0.4, [100, 1000, 10_000], replicas=2000,
                         master_seed=4)
        assert rep.fractions_increasing
        assert rep.divergence_fractions[-1] > rep.divergence_fractions[0]


class TestShiga5:
    def test_phi_integral_closed_form_vs_quad(self):
        rep = shiga5_run(0.5, levels=10, replicas=400, master_seed=2)
        assert rep.phi_integral == pytest.approx(1 / math.log(2), rel=1e-12)
        assert rep.phi_integral_quad == pytest.approx(rep.phi_integral,
                                                      rel=1e-9)

    def test_alpha03_phi_integral(self):
        want = math.log(2.0) ** (1 - 1 / 0.3) / (1 / 0.3 - 1)
        assert shiga5_phi_integral(0.3) == pytest.approx(want, rel=1e-12)

    def test_density_shape(self):
        rho = shiga5_density(0.5)
        assert rho(0.25) == pytest.approx(0.25 ** -3 * math.log(4) ** -2)

    def test_partials_grow_and_laplace_consistent(self):
        rep = shiga5_run(0.5, levels=12, replicas=3000, master_seed=7)
        assert rep.partials_growing
        assert rep.laplace_consistent

    def test_heavy_tail_mean_instability(self):
        rep = shiga5_run(0.5, levels=8, replicas=4000, master_seed=5)
        trace = np.array(rep.mean_trace)
        # infinite-mean samples: prefix means swing by orders of magnitude
        assert trace.max() > 10 * trace.min()

    def test_gates(self):
        with pytest.raises(UsageError):
            shiga5_run(0.7, 10, 10, 0)
        with pytest.raises(UsageError):
            shiga5_run(0.5, 2, 10, 0)


class TestBernoulli:
    def test_exact_outputs(self):
        rep = bernoulli_non_unifiable()
        assert rep.finiteness_probability == Fraction(1, 2)
        assert rep.series_diverges
        assert any("negative control" in n for n in rep.notes)

    def test_dict_form(self):
        d = bernoulli_non_unifiable().as_dict()
        assert d["finiteness_probability"] == "1/2"
        assert d["series_diverges"] is True


class TestHarness:
    def test_route_a_contingency(self):
        sc = route_a_scenario(2.0)
        rep = limit_jeulin_harness(sc, [PowerLaw(4), PowerLaw(2.5)],
                                   [1000, 10_000], replicas=100,
                                   master_seed=3)
        assert rep.implication_respected
        by_label = {r.f_label: r for r in rep.rows}
        conv = by_label[PowerLaw(4).label]
        div = by_label[PowerLaw(2.5).label]
        assert conv.series_verdict == Verdict.CONVERGES
        assert conv.stabilized_fraction >= 0.9
        assert div.series_verdict == Verdict.DIVERGES
        assert div.stabilized_fraction <= 0.1

    def test_shiga3_exhibits_converse_failure(self):
        sc = shiga3_scenario(0.4)
        rep = limit_jeulin_harness(sc, [PowerLaw(2.5)], [100, 10_000],
                                   replicas=400, master_seed=6,
                                   eps_rel=0.02)
        assert rep.implication_respected
        assert rep.exhibits_converse_failure

    def test_bernoulli_route_respected(self):
        # half the paths are identically zero, yet the divergent series is
        # not a violation: P(X>0) < 1 demands almost-sure evidence
        sc = bernoulli_scenario()
        rep = limit_jeulin_harness(sc, [PowerLaw(0.0)], [100, 1000],
                                   replicas=300, master_seed=8)
        row = rep.rows[0]
        assert 0.3 <= row.stabilized_fraction <= 0.7
        assert rep.implication_respected

    def test_zero_mass_scenario_rejected(self):
        sc = route_a_scenario(1.0)
        dead = type(sc)(label="dead", phi_exponent=1.0,
                        v_sampler=sc.v_sampler, limit_positive_prob=0.0,
                        limit_descriptor="zero")
        with pytest.raises(UsageError):
            limit_jeulin_harness(dead, [PowerLaw(3)], [10, 100], 10, 0)

    def test_ladder_gate(self):
        with pytest.raises(UsageError):
            limit_jeulin_harness(route_a_scenario(), [PowerLaw(3)], [100],
                                 10, 0)
