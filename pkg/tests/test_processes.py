import math

import numpy as np
import pytest

from confpp.core import (Configuration, DiscreteGround, SetFunction,
                         indicator_empty, power_function)
from confpp.errors import (CocycleError, GroundMismatchError,
                           UndefinedConditionalError, ValidationError)
from confpp.processes import (DiscreteTable, Gibbs, MixedPoisson,
                              MixingDensity, PapangelouSpec, Poisson,
                              Superposition, additivity_residual,
                              check_cocycle, convolve_measures,
                              correlation_functional, exponential_mixing,
                              gamma_mixing, gibbs_table, lenard_pd_check,
                              mixing_convolution, papangelou_of_table,
                              pairwise_gibbs_spec, point_mass_mixing,
                              poisson_table, projection_density,
                              recover_correlation, to_discrete_table,
                              uniqueness_diagnostic)
from confpp.transforms import conv_disjoint

G4 = DiscreteGround((0.7, 1.2, 0.5, 0.9))


def _split_support_tables(ground, rng, split_mask):
    """Random tables supported on complementary site blocks."""
    out = []
    for support in (split_mask, (ground.n_subsets - 1) & ~split_mask):
        probs = np.zeros(ground.n_subsets)
        masks = [m for m in range(ground.n_subsets) if m & ~support == 0]
        vals = rng.uniform(0.1, 1.0, len(masks))
        vals /= vals.sum()
        probs[masks] = vals
        out.append(DiscreteTable(ground, probs))
    return out


class TestMixingDensity:
    def test_point_mass(self):
        p = point_mass_mixing(1.5)
        assert p.moment(1) == 1.5
        assert p.moment(2) == pytest.approx(2.25)

    def test_exponential_moments(self):
        p = exponential_mixing(2.0, n_points=2048)
        assert p.moment(1) == pytest.approx(0.5, rel=1e-4)
        assert p.moment(2) == pytest.approx(0.5, rel=1e-3)

    def test_gamma_moments(self):
        p = gamma_mixing(2.0, 1.0, n_points=2048)
        assert p.moment(1) == pytest.approx(2.0, rel=1e-4)

    def test_validation(self):
        with pytest.raises(ValidationError):
            MixingDensity(np.array([1.0, 0.5]), np.array([0.5, 0.5]))
        with pytest.raises(ValidationError):
            MixingDensity(np.array([0.5, 1.0]), np.array([0.6, 0.6]))


class TestMixingConvolution:
    def test_point_point(self):
        p = mixing_convolution(point_mass_mixing(0.4), point_mass_mixing(0.8))
        assert p.grid.size == 1
        assert p.grid[0] == pytest.approx(1.2)

    def test_exp_exp_closed_form(self):
        p = mixing_convolution(exponential_mixing(1.0), exponential_mixing(1.0))
        ref = gamma_mixing(2.0, 1.0, n_points=p.grid.size)
        assert p.moment(1) == pytest.approx(ref.moment(1), rel=1e-6)
        assert p.moment(2) == pytest.approx(ref.moment(2), rel=1e-6)

    def test_grid_convolution_closed_form_agreement(self):
        # same-rate exponentials through the generic grid path
        e = exponential_mixing(1.0, n_points=1024)
        e2 = MixingDensity(e.grid, e.masses)  # strip the analytic tag
        conv = mixing_convolution(e2, e2)
        ref = gamma_mixing(2.0, 1.0, n_points=2048)
        assert conv.moment(1) == pytest.approx(ref.moment(1), rel=1e-4)
        assert abs(conv.moment(2) - ref.moment(2)) <= 1e-2

    def test_commutative_associative(self):
        g1 = MixingDensity(np.linspace(0.1, 1.0, 10), np.full(10, 0.1))
        g2 = MixingDensity(np.linspace(0.1, 1.0, 10),
                           np.linspace(1, 10, 10) / 55.0)
        a = mixing_convolution(g1, g2)
        b = mixing_convolution(g2, g1)
        assert np.max(np.abs(a.masses - b.masses)) < 1e-9

    def test_incompatible_grids(self):
        g1 = MixingDensity(np.linspace(0.1, 1.0, 10), np.full(10, 0.1))
        g2 = MixingDensity(np.linspace(0.1, 1.0, 7), np.full(7, 1 / 7))
        with pytest.raises(ValidationError):
            mixing_convolution(g1, g2)


class TestTables:
    def test_poisson_table_normalization(self):
        z = 0.8
        T = poisson_table(G4, z)
        w = G4.lp_weights(z)
        assert np.allclose(T.probs, w / w.sum())
        assert T.overlap_mass == 0.0

    def test_one_site_examples(self):
        g1 = DiscreteGround((1.0,))
        assert np.allclose(poisson_table(g1, 1.0).probs, [0.5, 0.5])
        assert np.allclose(poisson_table(g1, 2.0).probs, [1 / 3, 2 / 3])

    def test_validation(self):
        with pytest.raises(ValidationError):
            DiscreteTable(G4, np.full(G4.n_subsets, 1.0))
        probs = np.zeros(G4.n_subsets)
        probs[0] = 1.0
        with pytest.raises(ValidationError):
            DiscreteTable(G4, probs, overlap_probs=probs * 2)

    def test_gibbs_constant_rate_is_poisson(self):
        spec = PapangelouSpec(lambda gamma, x: 1.3)
        T = gibbs_table(G4, spec)
        assert np.max(np.abs(T.probs - poisson_table(G4, 1.3).probs)) < 1e-12

    def test_gibbs_pairwise_round_trip(self):
        J = np.array([[0, 0.3, 0.1, 0.0], [0.3, 0, 0.2, 0.4],
                      [0.1, 0.2, 0, 0.0], [0.0, 0.4, 0.0, 0]])
        spec = pairwise_gibbs_spec(G4, J, z=0.9)
        T = to_discrete_table(Gibbs(spec), G4)
        for mask in range(G4.n_subsets):
            for x in range(G4.n_sites):
                if mask >> x & 1:
                    continue
                got = papangelou_of_table(T, Configuration(G4, mask), x)
                want = spec(Configuration(G4, mask), x)
                assert got == pytest.approx(want, abs=1e-10)

    def test_path_dependent_rates_rejected(self):
        bad = PapangelouSpec(
            lambda gamma, x: 1.0 + 0.5 * (len(gamma) % 2) * (x == 0))
        with pytest.raises(CocycleError):
            gibbs_table(G4, bad)

    def test_cocycle_check(self):
        spec = pairwise_gibbs_spec(G4, np.zeros((4, 4)), z=2.0)
        samples = [(Configuration(G4, 0b0011), 2, 3)]
        worst, ok = check_cocycle(spec, samples)
        assert ok and worst < 1e-12


class TestCorrelation:
    def test_poisson_analytic(self):
        k = correlation_functional(Poisson(0.8), G4)
        assert np.array_equal(k.values, power_function(G4, 0.8).values)

    def test_empty_set_is_one(self):
        for model in (Poisson(0.8),
                      MixedPoisson(point_mass_mixing(1.2))):
            assert correlation_functional(model, G4)(0) == 1.0
        assert correlation_functional(poisson_table(G4, 0.8))(0) == 1.0

    def test_table_correlation_superset_sum(self):
        T = poisson_table(G4, 0.8)
        k = correlation_functional(T)
        eta = 0b0101
        acc = sum(T.probs[g] for g in range(G4.n_subsets) if g & eta == eta)
        assert k(eta) == pytest.approx(acc / G4.subset_mass[eta], rel=1e-12)

    def test_mixed_exponential_moments(self):
        gu = DiscreteGround((1.0,) * 4)
        theta = 1.7
        k = correlation_functional(
            MixedPoisson(exponential_mixing(theta, 2048)), gu)
        for n in (1, 2, 3):
            val = k.values[gu.subset_size == n][0]
            assert val == pytest.approx(math.factorial(n) / theta ** n,
                                        rel=1e-4)

    def test_gibbs_requires_table(self):
        spec = PapangelouSpec(lambda gamma, x: 1.0)
        with pytest.raises(ValidationError):
            correlation_functional(Gibbs(spec), G4)

    def test_superposition_analytic(self):
        k = correlation_functional(Superposition(Poisson(0.5), Poisson(0.7)),
                                   G4)
        assert np.max(np.abs(k.values
                             - power_function(G4, 1.2).values)) < 1e-12


class TestConvolveMeasures:
    def test_unit_element(self, rng):
        T = poisson_table(G4, 0.8)
        unit = np.zeros(G4.n_subsets)
        unit[0] = 1.0
        out = convolve_measures(T, DiscreteTable(G4, unit))
        assert np.max(np.abs(out.probs - T.probs)) < 1e-14
        assert out.overlap_mass == 0.0

    def test_poisson_pair_overlap_reported(self):
        C = convolve_measures(poisson_table(G4, 0.5), poisson_table(G4, 0.7))
        assert abs(C.probs.sum() - 1.0) < 1e-12
        assert C.overlap_mass > 0.0  # atoms collide with positive probability

    def test_correlation_commutes_on_split_supports(self, rng):
        m1, m2 = _split_support_tables(G4, rng, 0b0011)
        C = convolve_measures(m1, m2)
        assert C.overlap_mass == 0.0
        lhs = correlation_functional(C).values
        rhs = conv_disjoint(correlation_functional(m1),
                            correlation_functional(m2)).values
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_papangelou_additive_on_disjoint_part(self):
        C = convolve_measures(poisson_table(G4, 0.5), poisson_table(G4, 0.7))
        dp = C.disjoint_part()
        T = DiscreteTable(G4, dp / dp.sum())
        for mask in range(G4.n_subsets):
            for x in range(G4.n_sites):
                if mask >> x & 1:
                    continue
                r = papangelou_of_table(T, Configuration(G4, mask), x)
                assert r == pytest.approx(1.2, abs=1e-12)

    def test_ground_mismatch(self):
        other = DiscreteGround((1.0, 1.0))
        with pytest.raises(GroundMismatchError):
            convolve_measures(poisson_table(G4, 1.0),
                              poisson_table(other, 1.0))


class TestProjection:
    def test_round_trip_random(self, rng):
        k = SetFunction(G4, rng.standard_normal(G4.n_subsets))
        for z in (0.5, 1.0, 2.0):
            back = recover_correlation(projection_density(k, z), z)
            assert np.max(np.abs(back.values - k.values)) < 1e-10

    def test_density_reproduces_table_law(self):
        T = poisson_table(G4, 0.8)
        k = correlation_functional(T)
        D = projection_density(k, 1.0)
        w = G4.lp_weights(1.0)
        norm = float(np.prod(1.0 + np.asarray(G4.weights)))
        assert np.max(np.abs(D.values * w / norm - T.probs)) < 1e-12

    def test_full_set_single_term(self, rng):
        density = SetFunction(G4, rng.uniform(0.1, 1.0, G4.n_subsets))
        z = 1.5
        full = G4.n_subsets - 1
        k = recover_correlation(density, z)
        norm = float(np.prod(1.0 + z * np.asarray(G4.weights)))
        # only the empty remainder contributes at the full set
        assert k(full) == pytest.approx(density(full) / norm, rel=1e-12)

    def test_invalid_z(self):
        k = power_function(G4, 1.0)
        with pytest.raises(ValidationError):
            projection_density(k, 0.0)


class TestLenard:
    def test_table_correlations_pass(self, rng):
        for model in (poisson_table(G4, 0.8),
                      to_discrete_table(
                          MixedPoisson(MixingDensity(
                              np.array([0.5, 1.5]),
                              np.array([0.4, 0.6]))), G4)):
            k = correlation_functional(model)
            ok, worst = lenard_pd_check(k, trials=200, seed=7)
            assert ok and worst >= -1e-10

    def test_alternating_sign_fails(self):
        k = SetFunction(G4, np.where(G4.subset_size & 1, -1.0, 1.0))
        ok, worst = lenard_pd_check(k, trials=200, seed=7)
        assert not ok and worst < -1e-10

    def test_indicator_empty_passes(self):
        ok, worst = lenard_pd_check(indicator_empty(G4), trials=50, seed=7)
        assert ok


class TestUniqueness:
    def test_poisson_unique(self):
        rep = uniqueness_diagnostic(power_function(G4, 1.2), 4)
        assert rep.verdict == "unique_by_K_C2"
        assert rep.delta == 0.0
        # s_n is the weighted elementary symmetric polynomial times z^n
        import itertools
        m = G4.weights
        for n, s in enumerate(rep.s_values, start=1):
            e_n = sum(np.prod(c) for c in itertools.combinations(m, n))
            assert s == pytest.approx(1.2 ** n * e_n, rel=1e-12)

    def test_empty_indicator_unique(self):
        rep = uniqueness_diagnostic(indicator_empty(G4), 4)
        assert rep.verdict == "unique_by_K_C2"
        assert all(s == 0.0 for s in rep.s_values)

    def test_cubic_factorial_growth_inconclusive(self):
        vals = np.array([math.factorial(int(s)) ** 3
                         for s in G4.subset_size], dtype=float)
        rep = uniqueness_diagnostic(SetFunction(G4, vals), 4)
        assert rep.verdict == "inconclusive"

    def test_depth_validation(self):
        with pytest.raises(ValidationError):
            uniqueness_diagnostic(power_function(G4, 1.0), 9)


class TestPapangelou:
    def test_poisson_constant(self):
        T = poisson_table(G4, 0.8)
        for mask in range(G4.n_subsets):
            for x in range(G4.n_sites):
                if mask >> x & 1:
                    continue
                r = papangelou_of_table(T, Configuration(G4, mask), x)
                assert r == pytest.approx(0.8, abs=1e-12)

    def test_undefined_conditional(self):
        probs = np.zeros(G4.n_subsets)
        probs[0] = probs[1] = 0.5
        T = DiscreteTable(G4, probs)
        with pytest.raises(UndefinedConditionalError):
            papangelou_of_table(T, Configuration(G4, 0b10), 0)

    def test_occupied_site_rejected(self):
        T = poisson_table(G4, 1.0)
        with pytest.raises(ValidationError):
            papangelou_of_table(T, Configuration(G4, 0b1), 0)


class TestAdditivity:
    def test_constant_rates_vanish(self):
        r1 = PapangelouSpec(lambda gamma, x: 0.5)
        r2 = PapangelouSpec(lambda gamma, x: 0.7)
        samples = [(Configuration(G4, 0b1), Configuration(G4, 0b10), 2, 3)]
        assert additivity_residual(r1, r2, samples)["max"] == 0.0

    def test_point_independent_rates_vanish(self):
        r1 = PapangelouSpec(lambda gamma, x: 1.0 + 0.1 * len(gamma))
        r2 = PapangelouSpec(lambda gamma, x: 2.0 / (1.0 + len(gamma)))
        samples = [(Configuration(G4, 0b1), Configuration(G4, 0b10), 2, 3),
                   (Configuration(G4, 0b11), Configuration(G4, 0b100), 3, 0)]
        # the middle bracket vanishes when rates ignore the location
        assert additivity_residual(r1, r2, samples)["max"] < 1e-14

    def test_generic_interaction_nonzero(self):
        # non-uniform couplings so the candidate points x and y interact
        # differently with the occupied sites
        rng = np.random.default_rng(77)
        J = rng.uniform(0.1, 0.9, (4, 4))
        J = 0.5 * (J + J.T)
        np.fill_diagonal(J, 0.0)
        r1 = pairwise_gibbs_spec(G4, J, z=1.0)
        r2 = pairwise_gibbs_spec(G4, 0.5 * J, z=2.0)
        samples = [(Configuration(G4, 0b1), Configuration(G4, 0b10), 2, 3)]
        assert additivity_residual(r1, r2, samples)["max"] > 1e-6
