"""Satellite downlink channel model.

Shadowed-Rician fading for the satellite link (Nakagami-distributed LOS
amplitude plus complex-Gaussian multipath), Rayleigh terrestrial interferers
placed uniformly by area in an annulus around the destination, free-space
pathloss, and the resulting SINR. Provides both density evaluation and
random sampling so that analytic and Monte Carlo pipelines can cross-check
each other.

All powers are carried noise-normalized (divided by the noise variance), so
the SINR denominator is ``interference + 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, logsumexp

from .errors import DomainError, NumericError

SPEED_OF_LIGHT = 3.0e8  # m/s, free-space value used throughout

# Deterministic sub-stream labels hung off a scenario seed.
STREAM_PLACEMENT = 0
STREAM_CHANNEL = 1
STREAM_TRACE = 2

_SERIES_TERM_BUDGET = 1_000_000


# ---------------------------------------------------------------------------
# Confluent hypergeometric function 1F1(m; 1; z)
# ---------------------------------------------------------------------------

def hyp1f1_integer(m: float, z):
    """Kummer confluent hypergeometric function 1F1(m; 1; z) for z >= 0.

    Integer m collapses to the finite Kummer sum
    ``exp(z) * sum_k C(m-1, k) z^k / k!``, which is exact and stable.
    Non-integer m falls back to the raw power series with a term-ratio
    convergence test.

    Args:
        m: first parameter, >= 1 for the integer fast path.
        z: scalar or array of nonnegative arguments.

    Returns:
        Value(s) of 1F1(m; 1; z); ``inf`` on float overflow.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("hyp1f1_integer requires z >= 0")
    if m < 0.5:
        raise DomainError(f"hyp1f1_integer requires m >= 0.5, got {m}")
    out = np.exp(log_hyp1f1_integer(m, z))
    return float(out) if out.ndim == 0 else out


def log_hyp1f1_integer(m: float, z):
    """log of 1F1(m; 1; z), overflow-safe for large z (z >= 0)."""
    z = np.asarray(z, dtype=float)
    if float(m).is_integer() and m >= 1:
        mi = int(m)
        k = np.arange(mi)
        with np.errstate(divide="ignore", invalid="ignore"):
            # log of C(m-1, k) z^k / k!; the k=0 term is exactly 1 even at z=0
            log_terms = (
                gammaln(mi) - gammaln(mi - k) - 2.0 * gammaln(k + 1)
                + k * np.log(z[..., None])
            )
        log_terms = np.where(k == 0, 0.0, log_terms)
        log_terms = np.where((z[..., None] == 0) & (k > 0), -np.inf, log_terms)
        return z + logsumexp(log_terms, axis=-1)
    return _log_hyp1f1_series(m, z)


def _log_hyp1f1_series(m: float, z):
    """Raw power series sum_k (m)_k z^k / (k!)^2 in log domain.

    Guarded fallback for non-integer m. Terms are positive for m > 0 and
    z >= 0; summation stops once the term ratio certifies a negligible tail.
    """
    shape = np.shape(z)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty(z.shape)
    for i, zi in np.ndenumerate(z):
        if zi == 0.0:
            out[i] = 0.0
            continue
        log_term = 0.0  # k = 0
        acc = [0.0]
        peak = 0.0
        converged = False
        for k in range(_SERIES_TERM_BUDGET):
            # t_{k+1} / t_k = (m + k) z / (k + 1)^2
            ratio = (m + k) * zi / (k + 1.0) ** 2
            log_term += math.log(ratio)
            acc.append(log_term)
            peak = max(peak, log_term)
            if ratio < 1.0 and log_term < peak + math.log(1e-18):
                converged = True
                break
        if not converged:
            raise NumericError(
                f"1F1 series did not converge within {_SERIES_TERM_BUDGET} terms "
                f"(m={m}, z={zi})",
                achieved=math.exp(log_term - peak),
            )
        out[i] = logsumexp(np.asarray(acc))
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# Shadowed-Rician fading
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShadowedRicianParams:
    """Shadowed-Rician fading parameters for the satellite link.

    Attributes:
        b: average multipath half-power (linear); the scattered component
            has per-dimension variance b.
        m: Nakagami shadowing parameter of the LOS amplitude, >= 0.5.
        omega: average LOS power (linear), >= 0.
    """

    b: float
    m: float
    omega: float

    def __post_init__(self):
        if not self.b > 0:
            raise DomainError(f"fading b must be > 0, got {self.b}")
        if not self.m >= 0.5:
            raise DomainError(f"fading m must be >= 0.5, got {self.m}")
        if self.omega < 0:
            raise DomainError(f"fading omega must be >= 0, got {self.omega}")

    @property
    def alpha(self) -> float:
        two_bm = 2.0 * self.b * self.m
        return (two_bm / (two_bm + self.omega)) ** self.m / (2.0 * self.b)

    @property
    def beta(self) -> float:
        return 1.0 / (2.0 * self.b)

    @property
    def delta(self) -> float:
        two_bm = 2.0 * self.b * self.m
        return self.omega / (2.0 * self.b * (two_bm + self.omega))

    @property
    def mean_power(self) -> float:
        """E|h|^2 = omega + 2b."""
        return self.omega + 2.0 * self.b

    @classmethod
    def rayleigh(cls, mean_power: float = 1.0) -> "ShadowedRicianParams":
        """Pure-scatter limit (no LOS): exponential power with the given mean."""
        return cls(b=mean_power / 2.0, m=1.0, omega=0.0)


def shadowed_rician_pdf(x, p: ShadowedRicianParams):
    """Density of the satellite channel power gain |h|^2.

    ``alpha * exp(-beta x) * 1F1(m; 1; delta x)``, evaluated in log domain
    so strong-LOS parameter sets do not overflow.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("channel power gain must be >= 0")
    log_pdf = (
        math.log(p.alpha) - p.beta * x + log_hyp1f1_integer(p.m, p.delta * x)
    )
    out = np.exp(log_pdf)
    return float(out) if out.ndim == 0 else out


def srician_quad_nodes(
    p: ShadowedRicianParams,
    n_panels: int = 144,
    nodes_per_panel: int = 8,
) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panel rule for expectations against the fading density.

    Returns nodes x and weights w with ``sum(w_i g(x_i)) ~ E[g(|h|^2)]``.
    Panels are geometrically spaced over twelve decades below the truncation
    point, so integrands with sharp features deep in the fade region (e.g.
    decoding-error sigmoids) stay resolved at any SNR scale. The support is
    truncated where the density envelope (decay rate beta - delta > 0) leaves
    less than ~1e-20 mass.

    Raises:
        NumericError: if the truncated rule fails to capture unit mass.
    """
    decay = p.beta - p.delta
    x_max = 60.0 / decay
    x_min = x_max * 1e-12
    gl_x, gl_w = leggauss(nodes_per_panel)
    edges = np.concatenate(
        [[0.0], np.geomspace(x_min, x_max, n_panels)]
    )
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * gl_x[None, :]).ravel()
    w = (half[:, None] * gl_w[None, :]).ravel() * shadowed_rician_pdf(x, p)
    mass = float(np.sum(w))
    if abs(mass - 1.0) > 1e-7:
        raise NumericError(
            f"fading quadrature captured mass {mass:.12g}, expected 1",
            achieved=abs(mass - 1.0),
        )
    return x, w


def srician_cdf_grid(
    p: ShadowedRicianParams,
    n_panels: int = 4096,
    nodes_per_panel: int = 8,
) -> tuple[np.ndarray, np.ndarray]:
    """CDF of |h|^2 tabulated at panel edges.

    Panel masses come from Gauss-Legendre quadrature of the density, so the
    edge values carry only quadrature error; linear interpolation between
    edges is accurate to O((x_max / n_panels)^2).
    """
    decay = p.beta - p.delta
    x_max = 60.0 / decay
    gl_x, gl_w = leggauss(nodes_per_panel)
    edges = np.linspace(0.0, x_max, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = mid[:, None] + half[:, None] * gl_x[None, :]
    panel_mass = np.sum(
        (half[:, None] * gl_w[None, :]) * shadowed_rician_pdf(x, p), axis=1
    )
    cdf = np.concatenate([[0.0], np.cumsum(panel_mass)])
    if abs(cdf[-1] - 1.0) > 1e-7:
        raise NumericError(
            f"fading CDF captured mass {cdf[-1]:.12g}, expected 1",
            achieved=abs(cdf[-1] - 1.0),
        )
    return edges, np.minimum(cdf, 1.0)


def sample_channel_gain(p: ShadowedRicianParams, rng: np.random.Generator, size=None):
    """Draw |h|^2 where h = A e^{j phi} + Z.

    A is Nakagami-m with spread omega (A^2 ~ Gamma(m, omega/m)), phi uniform,
    Z complex Gaussian with per-dimension variance b; the power gain then
    follows the shadowed-Rician density by construction.
    """
    a = np.sqrt(rng.gamma(shape=p.m, scale=p.omega / p.m, size=size)) if p.omega > 0 else (
        np.zeros(size if size is not None else ()) )
    phi = rng.uniform(0.0, 2.0 * np.pi, size=size)
    sd = math.sqrt(p.b)
    re = a * np.cos(phi) + rng.normal(0.0, sd, size=size)
    im = a * np.sin(phi) + rng.normal(0.0, sd, size=size)
    gain = re * re + im * im
    return float(gain) if size is None else gain


# ---------------------------------------------------------------------------
# Link budget, interferer field, scenario
# ---------------------------------------------------------------------------

def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class LinkBudget:
    """Free-space link budget for one transmitter-destination pair.

    Attributes:
        carrier_hz: carrier frequency (Hz).
        distance_m: transmitter-destination distance (m).
        gain_tx_dbi / gain_rx_dbi: antenna gains (dBi).
        tx_snr_db: transmit SNR P/sigma^2 (dB), noise-normalized power.
    """

    carrier_hz: float
    distance_m: float
    gain_tx_dbi: float = 0.0
    gain_rx_dbi: float = 0.0
    tx_snr_db: float = 0.0

    def __post_init__(self):
        if not self.carrier_hz > 0:
            raise DomainError(f"carrier_hz must be > 0, got {self.carrier_hz}")
        if not self.distance_m > 0:
            raise DomainError(f"distance_m must be > 0, got {self.distance_m}")

    @property
    def tx_snr(self) -> float:
        """Transmit SNR, linear."""
        return _db_to_linear(self.tx_snr_db)


def pathloss_factor(l: LinkBudget) -> float:
    """Free-space power attenuation (c / 4 pi f d)^2 times linearized gains."""
    free_space = SPEED_OF_LIGHT / (4.0 * np.pi * l.carrier_hz * l.distance_m)
    return free_space ** 2 * _db_to_linear(l.gain_tx_dbi + l.gain_rx_dbi)


@dataclass(frozen=True)
class InterfererField:
    """K terrestrial interferers in an annulus around the destination.

    ``distances_m`` is filled by placement; every interferer shares the
    template carrier/gain/power entries, only the distance differs.
    """

    count: int
    r_inner_m: float
    r_outer_m: float
    carrier_hz: float
    gain_tx_dbi: float = 0.0
    gain_rx_dbi: float = 0.0
    tx_snr_db: float = 0.0
    distances_m: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.count < 0:
            raise DomainError(f"interferer count must be >= 0, got {self.count}")
        if not 0 < self.r_inner_m < self.r_outer_m:
            raise DomainError(
                f"annulus radii must satisfy 0 < r_inner_m < r_outer_m, "
                f"got r_inner_m={self.r_inner_m}, r_outer_m={self.r_outer_m}"
            )
        if self.distances_m is not None and len(self.distances_m) != self.count:
            raise ValueError(
                f"{len(self.distances_m)} distances for {self.count} interferers"
            )

    @property
    def tx_snr(self) -> float:
        return _db_to_linear(self.tx_snr_db)

    def budget_at(self, distance_m: float) -> LinkBudget:
        return LinkBudget(
            carrier_hz=self.carrier_hz,
            distance_m=distance_m,
            gain_tx_dbi=self.gain_tx_dbi,
            gain_rx_dbi=self.gain_rx_dbi,
            tx_snr_db=self.tx_snr_db,
        )

    def with_distances(self, distances_m: np.ndarray) -> "InterfererField":
        return replace(self, distances_m=np.asarray(distances_m, dtype=float))

    def coefficients(self) -> np.ndarray:
        """Per-interferer received-power coefficients phi_j * P_t (linear).

        Requires placed distances.
        """
        if self.count == 0:
            return np.zeros(0)
        if self.distances_m is None:
            raise ValueError("interferer distances not placed yet")
        phi = np.array([pathloss_factor(self.budget_at(d)) for d in self.distances_m])
        return phi * self.tx_snr


def place_interferers(f: InterfererField, rng: np.random.Generator) -> np.ndarray:
    """Draw K interferer distances uniformly by area over the annulus."""
    u = rng.random(f.count)
    return np.sqrt(f.r_inner_m ** 2 + u * (f.r_outer_m ** 2 - f.r_inner_m ** 2))


def aggregate_interference(field: InterfererField, gains) -> np.ndarray | float:
    """Total interference power sum_j phi_j P_t |h_j|^2, noise-normalized.

    Args:
        field: placed interferer field.
        gains: Rayleigh power gains |h_j|^2, shape (K,) or (draws, K).

    Returns:
        Scalar for a single gain vector, array of length draws otherwise.
    """
    gains = np.asarray(gains, dtype=float)
    if field.count == 0 and gains.size == 0:
        return 0.0 if gains.ndim <= 1 else np.zeros(gains.shape[0])
    if gains.shape[-1] != field.count:
        raise ValueError(
            f"got {gains.shape[-1]} gains for {field.count} interferers"
        )
    total = gains @ field.coefficients()
    return float(total) if total.ndim == 0 else total


@dataclass(frozen=True)
class Scenario:
    """Full link-level scenario: satellite link, interferer field, receiver.

    ``seed`` drives every random element (placement, channel draws, traces)
    through independent deterministic sub-streams.
    """

    satellite: LinkBudget
    fading: ShadowedRicianParams
    interferers: InterfererField
    rx_antennas: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.rx_antennas < 1:
            raise DomainError(f"rx_antennas must be >= 1, got {self.rx_antennas}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    def rng(self, stream: int, index: int = 0) -> np.random.Generator:
        """Independent generator for one named sub-stream of this scenario."""
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(stream, index))
        )

    def placed(self) -> "Scenario":
        """Scenario with interferer distances frozen from the placement stream."""
        if self.interferers.distances_m is not None or self.interferers.count == 0:
            if self.interferers.distances_m is None:
                return replace(
                    self, interferers=self.interferers.with_distances(np.zeros(0))
                )
            return self
        d = place_interferers(self.interferers, self.rng(STREAM_PLACEMENT))
        return replace(self, interferers=self.interferers.with_distances(d))

    @property
    def satellite_coefficient(self) -> float:
        """phi_s * P_s: received satellite power per unit channel gain."""
        return pathloss_factor(self.satellite) * self.satellite.tx_snr

    @property
    def avg_rx_snr(self) -> float:
        """Average received satellite SNR phi_s P_s E|h|^2 (linear)."""
        return self.satellite_coefficient * self.fading.mean_power


def sinr(s: Scenario, h_gain, i_a):
    """SINR phi_s P_s |h|^2 / (I_a + 1) with noise-normalized powers."""
    h_gain = np.asarray(h_gain, dtype=float)
    i_a = np.asarray(i_a, dtype=float)
    if np.any(h_gain < 0) or np.any(i_a < 0):
        raise DomainError("h_gain and i_a must be >= 0")
    out = s.satellite_coefficient * h_gain / (i_a + 1.0)
    return float(out) if out.ndim == 0 else out


def tx_snr_db_for_avg_rx_snr(
    link: LinkBudget, fading: ShadowedRicianParams, target_db: float
) -> float:
    """Transmit SNR (dB) that yields the requested average received SNR."""
    phi = pathloss_factor(link)
    return target_db - 10.0 * math.log10(phi * fading.mean_power)
