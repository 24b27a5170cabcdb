"""Channel model tests: density, special function, sampling, geometry."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from stinqos.channel import (
    InterfererField,
    LinkBudget,
    Scenario,
    ShadowedRicianParams,
    SPEED_OF_LIGHT,
    aggregate_interference,
    hyp1f1_integer,
    pathloss_factor,
    place_interferers,
    sample_channel_gain,
    shadowed_rician_pdf,
    sinr,
    srician_cdf_grid,
    srician_quad_nodes,
)
from stinqos.errors import DomainError


def hyp1f1_series_oracle(m: float, z: float, terms: int = 200) -> float:
    """Raw power series sum_k (m)_k z^k / (k!)^2, truncated at `terms`."""
    total = 0.0
    term = 1.0
    for k in range(terms):
        total += term
        term *= (m + k) * z / ((k + 1) ** 2)
    return total


class TestHyp1f1:
    def test_zero_argument(self):
        assert hyp1f1_integer(3, 0.0) == 1.0

    def test_m1_is_exp(self):
        assert hyp1f1_integer(1, 2.0) == pytest.approx(math.e ** 2, rel=1e-14)

    def test_m2_against_series_oracle(self):
        assert hyp1f1_integer(2, 1.0) == pytest.approx(
            hyp1f1_series_oracle(2, 1.0), rel=1e-13
        )
        assert hyp1f1_integer(2, 1.0) == pytest.approx(2 * math.e, rel=1e-13)

    @pytest.mark.parametrize("m", [1, 2, 5, 10, 20])
    @pytest.mark.parametrize("z", [0.3, 1.7, 9.2])
    def test_integer_m_grid_against_series(self, m, z):
        assert hyp1f1_integer(m, z) == pytest.approx(
            hyp1f1_series_oracle(m, z, terms=400), rel=1e-12
        )

    def test_non_integer_fallback(self):
        assert hyp1f1_integer(2.5, 1.3) == pytest.approx(
            hyp1f1_series_oracle(2.5, 1.3), rel=1e-12
        )

    def test_vectorized(self):
        z = np.array([0.0, 1.0, 2.0])
        out = hyp1f1_integer(2, z)
        assert out.shape == (3,)
        assert out[0] == 1.0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            hyp1f1_integer(2, -1.0)
        with pytest.raises(DomainError):
            hyp1f1_integer(0.2, 1.0)


class TestShadowedRicianPdf:
    def test_value_at_zero_is_alpha(self):
        p = ShadowedRicianParams(b=0.3, m=4, omega=1.2)
        assert shadowed_rician_pdf(0.0, p) == pytest.approx(p.alpha, rel=1e-14)

    def test_exponential_special_case_normalizes(self):
        p = ShadowedRicianParams(b=0.5, m=1, omega=1.0)
        val, err = quad(lambda x: shadowed_rician_pdf(x, p), 0, np.inf)
        assert abs(val - 1.0) < 1e-6
        # m=1 collapses to an exponential with mean omega + 2b
        x = np.linspace(0.0, 10.0, 50)
        expected = np.exp(-x / 2.0) / 2.0
        assert np.allclose(shadowed_rician_pdf(x, p), expected, rtol=1e-12)

    def test_series_oracle_point(self):
        p = ShadowedRicianParams(b=0.126, m=10, omega=0.835)
        expected = p.alpha * math.exp(-p.beta * 1.0) * hyp1f1_series_oracle(
            10, p.delta * 1.0
        )
        assert shadowed_rician_pdf(1.0, p) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("m", range(1, 21))
    def test_normalization_grid(self, m):
        p = ShadowedRicianParams(b=0.25, m=m, omega=0.9)
        val, err = quad(lambda x: shadowed_rician_pdf(x, p), 0, np.inf, limit=200)
        assert abs(val - 1.0) < 1e-6

    @pytest.mark.parametrize("b,omega", [(0.126, 0.835), (0.5, 2.0)])
    @pytest.mark.parametrize("m", [1, 5, 20])
    def test_normalization_over_power_grid(self, b, omega, m):
        p = ShadowedRicianParams(b=b, m=m, omega=omega)
        val, err = quad(lambda x: shadowed_rician_pdf(x, p), 0, np.inf, limit=200)
        assert abs(val - 1.0) < 1e-6

    def test_derived_parameter_domains(self):
        p = ShadowedRicianParams(b=0.126, m=10, omega=0.835)
        assert p.alpha > 0 and p.beta > 0 and 0 <= p.delta < p.beta

    def test_invalid_params(self):
        with pytest.raises(DomainError):
            ShadowedRicianParams(b=0.0, m=1, omega=1.0)
        with pytest.raises(DomainError):
            ShadowedRicianParams(b=0.5, m=0.3, omega=1.0)
        with pytest.raises(DomainError):
            ShadowedRicianParams(b=0.5, m=1, omega=-0.1)


class TestSampling:
    def test_no_los_is_exponential(self):
        p = ShadowedRicianParams(b=0.4, m=1, omega=0.0)
        rng = np.random.default_rng(3)
        g = sample_channel_gain(p, rng, size=200_000)
        assert np.mean(g) == pytest.approx(2 * 0.4, rel=0.01)
        # exponential second moment: E X^2 = 2 (E X)^2
        assert np.mean(g ** 2) == pytest.approx(2 * (2 * 0.4) ** 2, rel=0.03)

    def test_mean_identity(self):
        p = ShadowedRicianParams(b=0.126, m=10, omega=0.835)
        rng = np.random.default_rng(11)
        g = sample_channel_gain(p, rng, size=1_000_000)
        assert np.mean(g) == pytest.approx(p.mean_power, rel=0.01)

    def test_ks_distance_against_quadrature_cdf(self):
        p = ShadowedRicianParams(b=0.126, m=10, omega=0.835)
        rng = np.random.default_rng(5)
        n = 100_000
        g = np.sort(sample_channel_gain(p, rng, size=n))
        edges, cdf_grid = srician_cdf_grid(p)
        cdf = np.interp(g, edges, cdf_grid, left=0.0, right=1.0)
        steps = np.arange(1, n + 1) / n
        ks = max(np.max(np.abs(cdf - steps)), np.max(np.abs(cdf - steps + 1.0 / n)))
        assert ks < 0.01

    def test_scalar_draw(self):
        p = ShadowedRicianParams(b=0.2, m=2, omega=0.5)
        val = sample_channel_gain(p, np.random.default_rng(0))
        assert isinstance(val, float) and val >= 0


class TestQuadratureNodes:
    def test_mass_and_mean(self):
        p = ShadowedRicianParams(b=0.1, m=5, omega=2.0)
        x, w = srician_quad_nodes(p)
        assert abs(np.sum(w) - 1.0) < 1e-9
        assert np.sum(w * x) == pytest.approx(p.mean_power, rel=1e-9)


class TestPathloss:
    def test_unit_free_space(self):
        # pick d so the free-space ratio is exactly 1
        f = 1.0e9
        d = SPEED_OF_LIGHT / (4 * math.pi * f)
        l = LinkBudget(carrier_hz=f, distance_m=d)
        assert pathloss_factor(l) == pytest.approx(1.0, rel=1e-12)

    def test_inverse_square(self):
        l1 = LinkBudget(carrier_hz=2e9, distance_m=1000.0)
        l2 = LinkBudget(carrier_hz=2e9, distance_m=2000.0)
        assert pathloss_factor(l1) == pytest.approx(4 * pathloss_factor(l2), rel=1e-12)

    def test_reference_value(self):
        l = LinkBudget(carrier_hz=2e9, distance_m=1e6)
        expected = (SPEED_OF_LIGHT / (4 * math.pi * 2e9 * 1e6)) ** 2
        assert pathloss_factor(l) == pytest.approx(expected, rel=1e-14)
        assert pathloss_factor(l) == pytest.approx(1.425e-16, rel=1e-3)

    def test_scale_law(self):
        for d in (1e3, 5e4, 2e6):
            l = LinkBudget(carrier_hz=2e9, distance_m=d, gain_tx_dbi=7.0)
            assert pathloss_factor(l) * d ** 2 == pytest.approx(
                pathloss_factor(LinkBudget(carrier_hz=2e9, distance_m=1.0,
                                           gain_tx_dbi=7.0)),
                rel=1e-12,
            )

    def test_invalid(self):
        with pytest.raises(DomainError):
            LinkBudget(carrier_hz=0.0, distance_m=1.0)
        with pytest.raises(DomainError):
            LinkBudget(carrier_hz=1e9, distance_m=0.0)


def _field(count=3, tx_snr_db=0.0):
    return InterfererField(
        count=count, r_inner_m=2000.0, r_outer_m=10000.0,
        carrier_hz=2e9, tx_snr_db=tx_snr_db,
    )


class TestPlacement:
    def test_empty(self):
        assert len(place_interferers(_field(0), np.random.default_rng(0))) == 0

    def test_support(self):
        d = place_interferers(_field(500), np.random.default_rng(1))
        assert np.all(d >= 2000.0) and np.all(d <= 10000.0)

    def test_area_uniform_moment(self):
        d = place_interferers(
            InterfererField(count=1_000_000, r_inner_m=2e3, r_outer_m=1e4,
                            carrier_hz=2e9),
            np.random.default_rng(2),
        )
        expected = (2e3 ** 2 + 1e4 ** 2) / 2
        assert np.mean(d ** 2) == pytest.approx(expected, rel=0.005)

    def test_bad_radii(self):
        with pytest.raises(DomainError):
            InterfererField(count=1, r_inner_m=5e3, r_outer_m=2e3, carrier_hz=2e9)


class TestAggregateInterference:
    def test_empty_field(self):
        f = _field(0).with_distances(np.zeros(0))
        assert aggregate_interference(f, np.zeros(0)) == 0.0

    def test_single_term(self):
        # make phi = 1 by choosing the unit free-space distance, P_t/sigma^2 = 2
        d_unit = SPEED_OF_LIGHT / (4 * math.pi * 2e9)
        f = InterfererField(count=1, r_inner_m=d_unit / 2, r_outer_m=2 * d_unit,
                            carrier_hz=2e9, tx_snr_db=10 * math.log10(2.0))
        f = f.with_distances(np.array([d_unit]))
        assert aggregate_interference(f, np.array([0.5])) == pytest.approx(1.0, rel=1e-12)

    def test_monte_carlo_mean(self):
        f = _field(4)
        f = f.with_distances(place_interferers(f, np.random.default_rng(3)))
        rng = np.random.default_rng(4)
        gains = rng.exponential(1.0, size=(100_000, 4))
        values = aggregate_interference(f, gains)
        assert np.mean(values) == pytest.approx(np.sum(f.coefficients()), rel=0.01)

    def test_length_mismatch(self):
        f = _field(3).with_distances(np.array([3e3, 4e3, 5e3]))
        with pytest.raises(ValueError):
            aggregate_interference(f, np.ones(2))


def _scenario(tx_snr_db=10.0, seed=7):
    f = _field(1)
    f = f.with_distances(np.array([5e3]))
    return Scenario(
        satellite=LinkBudget(carrier_hz=2e9, distance_m=1e6, tx_snr_db=tx_snr_db),
        fading=ShadowedRicianParams(b=0.126, m=10, omega=0.835),
        interferers=f,
        rx_antennas=2,
        seed=seed,
    )


class TestSinr:
    def test_no_interference(self):
        s = _scenario()
        expected = s.satellite_coefficient * 2.0
        assert sinr(s, 2.0, 0.0) == pytest.approx(expected, rel=1e-12)

    def test_zero_gain(self):
        assert sinr(_scenario(), 0.0, 3.0) == 0.0

    def test_ratio(self):
        s = _scenario()
        assert sinr(s, 1.0, 4.0) == pytest.approx(s.satellite_coefficient / 5.0, rel=1e-12)

    def test_monotonicity_property(self):
        s = _scenario()
        rng = np.random.default_rng(8)
        for _ in range(200):
            h, ia = rng.exponential(1.0), rng.exponential(1.0)
            dh, dia = rng.exponential(0.5), rng.exponential(0.5)
            assert sinr(s, h + dh, ia) > sinr(s, h, ia)
            assert sinr(s, h, ia + dia) < sinr(s, h, ia)

    def test_placement_is_frozen_per_seed(self):
        f = _field(4)
        s1 = Scenario(satellite=LinkBudget(carrier_hz=2e9, distance_m=1e6),
                      fading=ShadowedRicianParams.rayleigh(), interferers=f, seed=9)
        s2 = Scenario(satellite=LinkBudget(carrier_hz=2e9, distance_m=1e6),
                      fading=ShadowedRicianParams.rayleigh(), interferers=f, seed=9)
        np.testing.assert_array_equal(
            s1.placed().interferers.distances_m, s2.placed().interferers.distances_m
        )
