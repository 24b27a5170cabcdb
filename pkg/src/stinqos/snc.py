"""Mellin-transform network calculus bounds for peak AoI and queueing delay.

Random times are mapped to the exponential domain (X = e^T), where the
Mellin transform M_X(theta) = E[X^(theta-1)] is the moment generating
function of T at theta - 1. Closed forms exist for the supported arrival
and service models; the peak-AoI kernel combines them into a Chernoff-type
violation bound, and the bit-domain service process gives the delay bound
with its stability condition.
"""
from __future__ import annotations

import math
import warnings
from typing import Callable

from .aoi import ArrivalModel, ServiceModel
from .channel import Scenario
from .errors import DomainError, StabilityError
from .fbc import CodingSpec, ErrorModel, average_error
from .optimize import grid_then_golden
from .reports import QoSReport

_KERNEL_REL_TAIL = 1e-12
_KERNEL_MAX_TERMS = 200_000
_POLE_WARN_LEVEL = 1e6


# ---------------------------------------------------------------------------
# Transforms of inter-arrival and service times (channel-use domain)
# ---------------------------------------------------------------------------

def _log_mellin_gap(theta: float, am: ArrivalModel) -> float:
    """log E[e^{(theta-1) G}] for a single inter-arrival gap."""
    s = theta - 1.0
    if am.kind == "deterministic":
        return s * am.period
    if s >= am.rate:
        raise DomainError(
            f"inter-arrival transform diverges: theta-1={s:g} >= rate={am.rate:g}"
        )
    return -math.log1p(-s / am.rate)


def _log_mellin_service(theta: float, sm: ServiceModel) -> float:
    """log E[e^{(theta-1) S}] for a single update's service time."""
    s = theta - 1.0
    if sm.kind == "fixed" or sm.epsilon == 0.0:
        return s * sm.n
    if s * sm.n >= math.log(1.0 / sm.epsilon):
        raise DomainError(
            f"service transform diverges: (theta-1)*n={s * sm.n:g} >= "
            f"ln(1/epsilon)={math.log(1.0 / sm.epsilon):g}"
        )
    return (
        math.log1p(-sm.epsilon) + s * sm.n
        - math.log1p(-sm.epsilon * math.exp(s * sm.n))
    )


def _safe_exp(x: float) -> float:
    return math.inf if x > 709.0 else math.exp(x)


def mellin_interarrival(theta: float, am: ArrivalModel, steps: int) -> float:
    """Transform E[e^{(theta-1) T}] of the gap accumulated over `steps` arrivals.

    steps = 0 is the empty gap with transform 1.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if steps == 0:
        return 1.0
    return _safe_exp(steps * _log_mellin_gap(theta, am))


def mellin_cumulative_service(theta: float, sm: ServiceModel, count: int) -> float:
    """Transform of the total service time of `count` i.i.d. updates."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    return _safe_exp(count * _log_mellin_service(theta, sm))


def mellin_service(theta: float, sm: ServiceModel) -> float:
    """Transform of a single update's service time."""
    return _safe_exp(_log_mellin_service(theta, sm))


def _log_geometric_sum(log_r: float, terms: int) -> float:
    """log of sum_{j=0}^{terms-1} r^j, overflow-safe for any log ratio."""
    if terms < 1:
        raise ValueError("geometric sum needs at least one term")
    if abs(log_r) < 1e-14:  # exp(log_r) rounds to 1; sum is essentially flat
        return math.log(terms)
    if log_r > 0.0:
        return (terms - 1) * log_r + _log_geometric_sum(-log_r, terms)
    # (1 - r^terms) / (1 - r) with both factors as -expm1 for precision
    return math.log(-math.expm1(terms * log_r)) - math.log(-math.expm1(log_r))


# ---------------------------------------------------------------------------
# Peak-AoI kernel and bound
# ---------------------------------------------------------------------------

def log_paoi_kernel(
    theta: float, u: int | None, am: ArrivalModel, sm: ServiceModel
) -> float:
    """log of the kernel K(theta, u); overflow-safe building block.

    The sum runs over v = 1..u with u - v + 1 service terms and u - v gap
    terms; under i.i.d. gaps and services each lag contributes
    M_S(1+theta)^(lag+1) * M_I(1-theta)^lag. u = None evaluates the
    steady-state kernel, truncating once the tail term drops below 1e-12 of
    the partial sum; a nondecaying lag ratio means the sum diverges.
    """
    if theta <= 0:
        raise DomainError(f"theta must be > 0, got {theta}")
    if u is not None and u < 1:
        raise DomainError(f"update index must be >= 1, got {u}")
    log_lead = _log_mellin_gap(1.0 + theta, am)
    log_ms = _log_mellin_service(1.0 + theta, sm)
    log_ratio = log_ms + _log_mellin_gap(1.0 - theta, am)
    if u is not None:
        return log_lead + log_ms + _log_geometric_sum(log_ratio, u)
    if log_ratio >= 0.0:
        raise StabilityError(
            f"kernel sum diverges: term ratio {_safe_exp(log_ratio):g} >= 1",
            margin=_safe_exp(log_ratio),
        )
    ratio = math.exp(log_ratio)
    total = 0.0
    term = 1.0  # lag 0, relative to the leading service factor
    for _ in range(_KERNEL_MAX_TERMS):
        total += term
        term *= ratio
        if term <= _KERNEL_REL_TAIL * total:
            break
    else:
        # slow geometric decay near the theta -> 0 pole: fold in the exact
        # remainder, which is below the truncation tolerance by construction
        total += term / (1.0 - ratio)
    return log_lead + log_ms + math.log(total)


def paoi_kernel(theta: float, u: int | None, am: ArrivalModel, sm: ServiceModel) -> float:
    """Kernel K(theta, u): leading gap transform times the lag sum."""
    return _safe_exp(log_paoi_kernel(theta, u, am, sm))


def paoi_theta_interval(am: ArrivalModel, sm: ServiceModel) -> tuple[float, float]:
    """Open interval (0, theta_ub) on which the steady-state kernel is finite.

    The cap is the smallest of the gap-transform pole, the service-transform
    pole, and the point where the lag-sum ratio returns to 1.
    """
    if sm.mean_service >= am.mean_gap:
        raise StabilityError(
            f"no feasible theta: mean service {sm.mean_service:g} >= "
            f"mean gap {am.mean_gap:g}"
        )
    caps = [math.inf]
    if am.kind == "poisson":
        caps.append(am.rate)
    if sm.kind == "arq" and sm.epsilon > 0.0:
        caps.append(math.log(1.0 / sm.epsilon) / sm.n)
    t_max = min(caps)

    def log_ratio(theta: float) -> float:
        return _log_mellin_service(1.0 + theta, sm) + _log_mellin_gap(1.0 - theta, am)

    if math.isinf(t_max):
        # fixed service + deterministic gaps may never reach a transform pole
        # (the lag ratio e^{theta (n - a)} stays below 1); expand a bounded
        # number of times and accept the last cap as the search interval
        t_max = 1.0 / am.mean_gap
        for _ in range(64):
            if log_ratio(t_max) >= 0.0:
                break
            t_max *= 2.0
    probe = t_max * (1.0 - 1e-9)
    if log_ratio(probe) < 0.0:
        return 0.0, t_max
    lo, hi = 0.0, probe
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0 or log_ratio(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.0, lo


def paoi_bound(
    theta: float,
    a_th: float,
    n: int,
    u: int | None,
    am: ArrivalModel,
    sm: ServiceModel,
) -> QoSReport:
    """Peak-AoI violation bound exp(-theta A_th / n) * K(theta, u), clamped.

    a_th is the peak-AoI threshold in channel uses; n is the FBC blocklength
    entering the bound's exponent scaling.
    """
    if a_th < 0:
        raise DomainError(f"a_th must be >= 0, got {a_th}")
    if n < 1:
        raise DomainError(f"blocklength must be >= 1, got {n}")
    log_kernel = log_paoi_kernel(theta, u, am, sm)
    kernel = _safe_exp(log_kernel)
    raw = _safe_exp(-theta * a_th / n + log_kernel)
    return QoSReport(
        kind="aoi",
        theta=theta,
        threshold=a_th,
        kernel_value=kernel,
        bound_value=min(1.0, raw),
        raw_bound=raw,
        stability_ok=True,
        params={"n": n, "u": "inf" if u is None else u},
    )


def optimize_paoi_bound(
    a_th: float,
    n: int,
    u: int | None,
    am: ArrivalModel,
    sm: ServiceModel,
    theta_tol: float = 1e-9,
) -> QoSReport:
    """Tightest peak-AoI bound over the transform-finite theta interval."""
    _, t_ub = paoi_theta_interval(am, sm)
    lo = t_ub * 1e-6
    hi = t_ub * (1.0 - 1e-6)

    def log_raw(theta: float) -> float:
        return -theta * a_th / n + log_paoi_kernel(theta, u, am, sm)

    theta_star, _ = grid_then_golden(log_raw, lo, hi, n_grid=96, tol=theta_tol * t_ub)
    report = paoi_bound(theta_star, a_th, n, u, am, sm)
    report.params["theta_interval"] = (0.0, t_ub)
    return report


# ---------------------------------------------------------------------------
# Delay-bounded QoS: bit-domain service process, kernel, stability, bound
# ---------------------------------------------------------------------------

def constant_rate_arrival(alpha_bits: float) -> Callable[[float], float]:
    """Transform of a constant arrival of alpha bits per block."""
    if alpha_bits < 0:
        raise DomainError(f"arrival rate must be >= 0, got {alpha_bits}")

    def mellin(theta: float) -> float:
        return math.exp((theta - 1.0) * alpha_bits)

    mellin.description = f"constant_rate({alpha_bits}bits/block)"
    return mellin


def poisson_batch_arrival(rate_per_block: float, batch_bits: float) -> Callable[[float], float]:
    """Transform of Poisson-many batches of fixed size per block."""
    if rate_per_block <= 0 or batch_bits <= 0:
        raise DomainError("poisson batch arrival needs positive rate and batch size")

    def mellin(theta: float) -> float:
        return math.exp(rate_per_block * (math.exp((theta - 1.0) * batch_bits) - 1.0))

    mellin.description = f"poisson_batch({rate_per_block}/block,{batch_bits}bits)"
    return mellin


def mellin_service_process(
    theta: float,
    spec: CodingSpec,
    s: Scenario,
    em: ErrorModel,
    avg_error: float | None = None,
) -> float:
    """Transform of the per-block served bits: log2(M) with prob 1 - eps.

    eps is the scenario's average decoding error probability; pass
    ``avg_error`` to reuse a precomputed value across theta evaluations.
    """
    eps = average_error(s, spec, em).value if avg_error is None else avg_error
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"average error must be in [0, 1], got {eps}")
    return eps + (1.0 - eps) * math.exp((theta - 1.0) * spec.bits_per_block)


def stability_check(
    theta: float,
    arrival_mellin: Callable[[float], float],
    spec: CodingSpec,
    s: Scenario,
    em: ErrorModel,
    avg_error: float | None = None,
) -> tuple[bool, float]:
    """Whether M_A(1+theta) M_S(1-theta) < 1, plus the product as margin."""
    product = arrival_mellin(1.0 + theta) * mellin_service_process(
        1.0 - theta, spec, s, em, avg_error=avg_error
    )
    return product < 1.0, product


def delay_kernel(
    theta: float,
    d_th: float,
    arrival_mellin: Callable[[float], float],
    spec: CodingSpec,
    s: Scenario,
    em: ErrorModel,
    avg_error: float | None = None,
) -> float:
    """Delay kernel M_S(1-theta)^D_th / (1 - M_A(1+theta) M_S(1-theta)).

    d_th is the target delay in blocks. Raises StabilityError (carrying the
    transform product) when the stability condition fails; values within
    1e-6 of the pole trigger a runtime warning.
    """
    if theta <= 0:
        raise DomainError(f"theta must be > 0, got {theta}")
    if d_th < 0:
        raise DomainError(f"d_th must be >= 0, got {d_th}")
    if avg_error is None:
        avg_error = average_error(s, spec, em).value
    ms = mellin_service_process(1.0 - theta, spec, s, em, avg_error=avg_error)
    product = arrival_mellin(1.0 + theta) * ms
    if product >= 1.0:
        raise StabilityError(
            f"stability condition violated: transform product {product:g} >= 1",
            margin=product,
        )
    kernel = ms ** d_th / (1.0 - product)
    if kernel > _POLE_WARN_LEVEL:
        warnings.warn(
            f"delay kernel {kernel:.3g} exceeds {_POLE_WARN_LEVEL:g}; "
            f"stability margin {product:.9g} is nearly 1",
            RuntimeWarning,
            stacklevel=2,
        )
    return kernel


def delay_bound(
    d_th: float,
    arrival_mellin: Callable[[float], float],
    spec: CodingSpec,
    s: Scenario,
    em: ErrorModel,
    avg_error: float | None = None,
    theta_tol: float = 1e-9,
) -> QoSReport:
    """Delay violation bound inf over stable theta of the delay kernel."""
    if avg_error is None:
        avg_error = average_error(s, spec, em).value

    def product(theta: float) -> float:
        try:
            return arrival_mellin(1.0 + theta) * mellin_service_process(
                1.0 - theta, spec, s, em, avg_error=avg_error
            )
        except OverflowError:
            return math.inf

    # the stable set is an interval (0, theta_hi): the product is log-convex
    # with value 1 at theta = 0
    probe = None
    for theta in [10.0 ** e for e in range(-8, 4)]:
        if product(theta) < 1.0:
            probe = theta
            break
    if probe is None:
        raise StabilityError(
            "no stable theta: transform product >= 1 everywhere",
            margin=min(product(10.0 ** e) for e in range(-8, 4)),
        )
    hi = probe
    while product(hi) < 1.0:
        hi *= 2.0
        if hi > 1e12:
            break
    lo_edge, hi_edge = probe, hi
    for _ in range(200):
        mid = 0.5 * (lo_edge + hi_edge)
        if product(mid) < 1.0:
            lo_edge = mid
        else:
            hi_edge = mid
    theta_hi = lo_edge

    def log_kernel(theta: float) -> float:
        ms = mellin_service_process(1.0 - theta, spec, s, em, avg_error=avg_error)
        p = arrival_mellin(1.0 + theta) * ms
        if p >= 1.0:
            return math.inf
        return d_th * math.log(ms) - math.log(1.0 - p)

    theta_star, log_k = grid_then_golden(
        log_kernel, theta_hi * 1e-9, theta_hi * (1.0 - 1e-9),
        n_grid=96, tol=theta_tol * theta_hi,
    )
    raw = math.exp(log_k)
    _, margin = stability_check(theta_star, arrival_mellin, spec, s, em, avg_error)
    return QoSReport(
        kind="delay",
        theta=theta_star,
        threshold=d_th,
        kernel_value=raw,
        bound_value=min(1.0, raw),
        raw_bound=raw,
        stability_ok=True,
        params={
            "avg_error": avg_error,
            "bits_per_block": spec.bits_per_block,
            "arrival": getattr(arrival_mellin, "description", "custom"),
            "stability_margin": margin,
            "theta_hi": theta_hi,
        },
    )
