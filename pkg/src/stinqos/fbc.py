"""Finite-blocklength error probability and error-rate QoS exponents.

Normal-approximation decoding error for short packets, its average over the
fading/interference law (Monte Carlo or deterministic quadrature, both
cross-checkable), the Gallager-style exponent of the averaged channel, and
the closed-form exponent approximation in terms of the link SNRs.

Rates are natural-log units (nats per channel use) throughout; bit-domain
quantities are converted at module boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.laguerre import laggauss
from scipy.special import erfc, logsumexp

from . import channel
from .channel import Scenario, srician_quad_nodes
from .errors import DomainError, NumericError
from .optimize import grid_then_golden
from .reports import QoSReport

# Gauss-Laguerre nodes per interferer dimension; the tensor grid integrates
# the i.i.d. unit-mean exponential gains exactly enough for smooth integrands.
_GL_NODES_BY_K = {0: 1, 1: 32, 2: 16, 3: 10, 4: 8, 5: 7, 6: 6}
_QUAD_PANELS = (96, 144, 216, 324)


@dataclass(frozen=True)
class CodingSpec:
    """Finite-blocklength code: n channel uses carrying one of M messages.

    ``rate`` defaults to ln(M)/n nats per channel use and may be overridden
    for rate sweeps that keep M fixed.
    """

    blocklength: int
    code_size: int
    rate: float | None = None

    def __post_init__(self):
        if self.blocklength < 1:
            raise DomainError(f"blocklength must be >= 1, got {self.blocklength}")
        if self.code_size < 2:
            raise DomainError(f"code_size must be >= 2, got {self.code_size}")
        if self.rate is None:
            object.__setattr__(
                self, "rate", math.log(self.code_size) / self.blocklength
            )
        if not self.rate > 0:
            raise DomainError(f"rate must be > 0, got {self.rate}")

    @property
    def bits_per_block(self) -> float:
        return math.log2(self.code_size)


@dataclass(frozen=True)
class ErrorModel:
    """How fading expectations are evaluated."""

    method: str = "quadrature"  # "quadrature" | "monte_carlo"
    sample_budget: int = 100_000
    quad_tolerance: float = 1e-6

    def __post_init__(self):
        if self.method not in ("quadrature", "monte_carlo"):
            raise DomainError(f"unknown error model method {self.method!r}")
        if self.method == "monte_carlo" and self.sample_budget < 1_000:
            raise DomainError(
                f"sample_budget must be >= 1000, got {self.sample_budget}"
            )
        if not 0 < self.quad_tolerance <= 1e-3:
            raise DomainError(
                f"quad_tolerance must be in (0, 1e-3], got {self.quad_tolerance}"
            )


@dataclass(frozen=True)
class ErrorResult:
    """Average error probability with its accuracy estimate."""

    value: float
    std_error: float | None  # Monte Carlo mode
    achieved_tol: float | None  # quadrature mode
    method: str


# ---------------------------------------------------------------------------
# Normal approximation pieces
# ---------------------------------------------------------------------------

def capacity_nats(gamma):
    """AWGN capacity ln(1 + gamma) in nats per channel use."""
    g = np.asarray(gamma, dtype=float)
    out = np.log1p(g)
    return float(out) if out.ndim == 0 else out


def dispersion(gamma):
    """Channel dispersion 1 - (1 + gamma)^-2 in nats^2 per channel use."""
    g = np.asarray(gamma, dtype=float)
    out = 1.0 - (1.0 + g) ** -2
    return float(out) if out.ndim == 0 else out


def q_function(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(x / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def conditional_error(gamma, spec: CodingSpec):
    """Decoding error probability at a fixed SINR.

    Q((C - R) / sqrt(V / n)), clamped to [0, 1]; the zero-dispersion corner
    (gamma = 0) degenerates to an error/no-error indicator on rate vs
    capacity.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise DomainError("SINR must be >= 0")
    c = np.log1p(g)
    v = 1.0 - (1.0 + g) ** -2
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = (c - spec.rate) / np.sqrt(v / spec.blocklength)
    arg = np.where(
        v > 0,
        arg,
        np.where(c > spec.rate, np.inf, np.where(c < spec.rate, -np.inf, 0.0)),
    )
    out = np.clip(0.5 * erfc(arg / math.sqrt(2.0)), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# SINR law: Monte Carlo draws or deterministic quadrature nodes
# ---------------------------------------------------------------------------

def sinr_samples(s: Scenario, n_draws: int, stream_index: int = 0) -> np.ndarray:
    """Monte Carlo SINR draws with interferer positions frozen per scenario."""
    s = s.placed()
    rng = s.rng(channel.STREAM_CHANNEL, stream_index)
    h = channel.sample_channel_gain(s.fading, rng, size=n_draws)
    k = s.interferers.count
    if k:
        gains = rng.exponential(1.0, size=(n_draws, k))
        i_a = channel.aggregate_interference(s.interferers, gains)
    else:
        i_a = np.zeros(n_draws)
    return channel.sinr(s, h, i_a)


def _interference_nodes(field: channel.InterfererField) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Laguerre discretization of the aggregate interference."""
    k = field.count
    if k == 0:
        return np.zeros(1), np.ones(1)
    if k not in _GL_NODES_BY_K:
        raise NumericError(
            f"quadrature interference grid supports K <= {max(_GL_NODES_BY_K)}; "
            f"got K={k}; use the monte_carlo error model instead"
        )
    nodes, wts = laggauss(_GL_NODES_BY_K[k])
    coeff = field.coefficients()
    grids = np.meshgrid(*([nodes] * k), indexing="ij")
    i_a = sum(coeff[j] * grids[j] for j in range(k)).ravel()
    wgrids = np.meshgrid(*([wts] * k), indexing="ij")
    w = np.ones_like(i_a)
    for j in range(k):
        w *= wgrids[j].ravel()
    return i_a, w


def sinr_quadrature(
    s: Scenario, n_panels: int = 96
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic (SINR node, weight) pairs for the scenario's fading law."""
    s = s.placed()
    x, w = srician_quad_nodes(s.fading, n_panels=n_panels, nodes_per_panel=8)
    i_a, iw = _interference_nodes(s.interferers)
    gam = (s.satellite_coefficient * x[:, None] / (1.0 + i_a[None, :])).ravel()
    wts = (w[:, None] * iw[None, :]).ravel()
    return gam, wts


def _expectation_quadrature(s: Scenario, fn, tol: float) -> tuple[float, float]:
    """E[fn(SINR)] by panel-refined quadrature; returns (value, achieved)."""
    prev = None
    for panels in _QUAD_PANELS:
        gam, wts = sinr_quadrature(s, n_panels=panels)
        val = float(np.sum(wts * fn(gam)))
        if prev is not None and abs(val - prev) <= tol:
            return val, abs(val - prev)
        prev = val
    raise NumericError(
        f"SINR quadrature did not reach tolerance {tol:g}",
        achieved=abs(val - prev),
    )


def average_error(s: Scenario, spec: CodingSpec, em: ErrorModel) -> ErrorResult:
    """Decoding error probability averaged over fading and interference.

    Monte Carlo mode reports a standard error; quadrature mode refines the
    panel count until successive values differ by less than quad_tolerance.
    """
    if em.method == "monte_carlo":
        gam = sinr_samples(s, em.sample_budget)
        errs = conditional_error(gam, spec)
        value = float(np.mean(errs))
        se = float(np.std(errs, ddof=1) / math.sqrt(em.sample_budget))
        return ErrorResult(value=value, std_error=se, achieved_tol=None,
                           method="monte_carlo")
    value, achieved = _expectation_quadrature(
        s, lambda g: conditional_error(g, spec), em.quad_tolerance
    )
    return ErrorResult(value=min(max(value, 0.0), 1.0), std_error=None,
                       achieved_tol=achieved, method="quadrature")


# ---------------------------------------------------------------------------
# Gallager exponent of the averaged channel
# ---------------------------------------------------------------------------

def gallager_e0_samples(rho: float, gammas, n: int, weights=None) -> float:
    """E0(rho) = -(1/n) ln E[(1 + gamma/(1+rho))^(-n rho)] for a discrete law.

    ``weights`` of None means equally weighted samples. The inner expectation
    is evaluated in log domain, so large n does not underflow.
    """
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must be in [0, 1], got {rho}")
    if rho == 0.0:
        return 0.0
    g = np.asarray(gammas, dtype=float)
    t = -n * rho * np.log1p(g / (1.0 + rho))
    if weights is None:
        log_e = float(logsumexp(t) - math.log(g.size))
    else:
        w = np.asarray(weights, dtype=float)
        log_e = float(logsumexp(t, b=w) - math.log(w.sum()))
    return -log_e / n


def error_exponent_samples(
    gammas, rate: float, n: int, weights=None, rho_tol: float = 1e-6
) -> tuple[float, float]:
    """sup over rho of E0(rho) - rho * rate for a discrete SINR law.

    Returns (theta, rho_star). E0 is concave in rho, so a 64-point coarse
    grid plus golden-section refinement locates the supremum; theta is
    clamped at 0 (rho = 0 is always feasible).
    """
    def neg_objective(rho: float) -> float:
        return -(gallager_e0_samples(rho, gammas, n, weights) - rho * rate)

    rho_star, neg_best = grid_then_golden(neg_objective, 0.0, 1.0,
                                          n_grid=64, tol=rho_tol)
    theta = -neg_best
    if theta <= 0.0:
        return 0.0, 0.0
    return theta, rho_star


def _gamma_law(s: Scenario, em: ErrorModel, n_panels: int = 96):
    if em.method == "monte_carlo":
        return sinr_samples(s, em.sample_budget), None
    return sinr_quadrature(s, n_panels=n_panels)


def gallager_e0(rho: float, s: Scenario, n: int, em: ErrorModel) -> float:
    """E0(rho) for the scenario's SINR law, dual-mode like average_error."""
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must be in [0, 1], got {rho}")
    if rho == 0.0:
        return 0.0
    if em.method == "monte_carlo":
        gam = sinr_samples(s, em.sample_budget)
        return gallager_e0_samples(rho, gam, n)
    prev = None
    for panels in _QUAD_PANELS:
        gam, wts = sinr_quadrature(s, n_panels=panels)
        val = gallager_e0_samples(rho, gam, n, wts)
        if prev is not None and abs(val - prev) <= em.quad_tolerance:
            return val
        prev = val
    raise NumericError(
        f"E0 quadrature did not reach tolerance {em.quad_tolerance:g}",
        achieved=abs(val - prev),
    )


def error_exponent(s: Scenario, spec: CodingSpec, em: ErrorModel) -> QoSReport:
    """Error-rate QoS exponent sup_rho {E0(rho) - rho R*} for the scenario."""
    gam, wts = _gamma_law(s, em)
    theta, rho_star = error_exponent_samples(gam, spec.rate, spec.blocklength, wts)
    if em.method == "quadrature":
        gam2, wts2 = sinr_quadrature(s, n_panels=192)
        refined = (
            gallager_e0_samples(rho_star, gam2, spec.blocklength, wts2)
            - rho_star * spec.rate
            if rho_star > 0
            else 0.0
        )
        drift = abs(max(refined, 0.0) - theta)
        if drift > max(em.quad_tolerance, 1e-8):
            raise NumericError(
                "error exponent value not stable under quadrature refinement",
                achieved=drift,
            )
    return QoSReport(
        kind="error",
        theta=theta,
        bound_value=theta,
        params={
            "rho_star": rho_star,
            "blocklength": spec.blocklength,
            "rate_nats": spec.rate,
            "method": em.method,
        },
    )


def error_exponent_closed_form(s: Scenario, spec: CodingSpec) -> QoSReport:
    """Closed-form exponent approximation from the link SNR budget.

    Uses the noise-normalized transmit SNRs of the satellite and of the K
    interferers plus the receive antenna count; independent of blocklength.
    Clamped at 0 when the rate meets or exceeds the effective log SNR ratio.
    """
    p_s = s.satellite.tx_snr
    p_t_sum = s.interferers.count * s.interferers.tx_snr
    n_r = s.rx_antennas
    b = 2.0 * n_r * p_t_sum + 1.0
    a = 2.0 * p_s * n_r + b
    denom = 4.0 - 2.0 * b / a
    if denom <= 0.0:  # b <= a always, so denom >= 2 for valid SNRs
        raise DomainError(f"closed-form denominator {denom} is not positive")
    excess = math.log(a / b) - spec.rate
    theta = excess ** 2 / denom if excess > 0.0 else 0.0
    return QoSReport(
        kind="error",
        theta=theta,
        bound_value=theta,
        params={
            "rate_nats": spec.rate,
            "p_s": p_s,
            "p_t_sum": p_t_sum,
            "rx_antennas": n_r,
            "method": "closed_form",
        },
    )
