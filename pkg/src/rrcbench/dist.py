"""Truncated normal on [0, 1] and beta kernels.

All array kernels broadcast over their arguments so that the RRC can evaluate
many per-class distributions in one numpy pass. Normal tail masses are
computed in log space (``log_ndtr``) and tail mean corrections through the
scaled complementary error function, so locations far outside [0, 1] stay
finite and accurate.
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import betainc, betaincinv, betaln, erfcx, log_ndtr, ndtr, ndtri, ndtri_exp, xlog1py, xlogy

from .core import SeededRng

ArrayLike = Union[float, np.ndarray]

SUPPORT_CLAMP = 1e-4        # supports are clamped to [SUPPORT_CLAMP, 1 - SUPPORT_CLAMP] before matching
SD_FLOOR = 1e-4
BETA_SHAPE_FLOOR = 1e-3
MATCH_MAX_STEPS = 200
MATCH_TOLERANCE = 1e-13
_BRACKET_WIDENINGS = 64
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT_2 = math.sqrt(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class TruncNormSpec:
    """Normal(location, scale) conditioned on [0, 1]."""
    location: float
    scale: float

    def __post_init__(self) -> None:
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValueError(f"Truncated normal scale must be a positive finite number, got {self.scale}.")
        if not math.isfinite(self.location):
            raise ValueError(f"Truncated normal location must be finite, got {self.location}.")


@dataclass(frozen=True)
class BetaSpec:
    """Beta(a, b) on [0, 1]."""
    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValueError(f"Beta shapes must be positive, got a={self.a}, b={self.b}.")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)


def _as_output(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def clamp_support(nu: ArrayLike) -> np.ndarray:
    return np.clip(np.asarray(nu, dtype=float), SUPPORT_CLAMP, 1.0 - SUPPORT_CLAMP)


# ── Normal building blocks ─────────────────────────────────────────────────────

def _log_normal_mass(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    """log(Φ(b) − Φ(a)) for a <= b."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        log_sf_a = log_ndtr(-a)
        upper = log_sf_a + np.log1p(-np.exp(log_ndtr(-b) - log_sf_a))
        log_cdf_b = log_ndtr(b)
        lower = log_cdf_b + np.log1p(-np.exp(log_ndtr(a) - log_cdf_b))
        middle = np.log(ndtr(b) - ndtr(a))
    return np.where(a > 0.0, upper, np.where(b < 0.0, lower, middle))


def _upper_tail_ratio(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # (φ(a) − φ(b)) / (Φ(b) − Φ(a)) for 0 <= a < b, divided through by φ(a)
    r = np.exp(-0.5 * (b - a) * (b + a))
    return _SQRT_2_OVER_PI * (1.0 - r) / (erfcx(a / _SQRT_2) - r * erfcx(b / _SQRT_2))


def _normal_ratio(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    """(φ(a) − φ(b)) / (Φ(b) − Φ(a)) for a < b."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        upper = _upper_tail_ratio(a, b)
        lower = -_upper_tail_ratio(-b, -a)
        phi_a = np.exp(-0.5 * a * a - _LOG_SQRT_2PI)
        phi_b = np.exp(-0.5 * b * b - _LOG_SQRT_2PI)
        middle = (phi_a - phi_b) / (ndtr(b) - ndtr(a))
    return np.where(a > 0.0, upper, np.where(b < 0.0, lower, middle))


# ── Truncated normal array kernels ─────────────────────────────────────────────

def _standardized_bounds(mu: ArrayLike, sigma: ArrayLike):
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return mu, sigma, -mu / sigma, (1.0 - mu) / sigma


def truncnorm_log_mass_array(mu: ArrayLike, sigma: ArrayLike) -> np.ndarray:
    """log of the normal mass on [0, 1]; pass it back as `log_mass` to skip recomputing it."""
    _, _, alpha, beta = _standardized_bounds(mu, sigma)
    return _log_normal_mass(alpha, beta)


def truncnorm_pdf_array(
    mu: ArrayLike, sigma: ArrayLike, t: ArrayLike, log_mass: Optional[np.ndarray] = None,
) -> np.ndarray:
    mu, sigma, alpha, beta = _standardized_bounds(mu, sigma)
    if log_mass is None:
        log_mass = _log_normal_mass(alpha, beta)
    t = np.asarray(t, dtype=float)
    z = (t - mu) / sigma
    with np.errstate(over='ignore'):
        density = np.exp(-0.5 * z * z - _LOG_SQRT_2PI - np.log(sigma) - log_mass)
    return np.where((t >= 0.0) & (t <= 1.0), density, 0.0)


def truncnorm_cdf_array(
    mu: ArrayLike, sigma: ArrayLike, t: ArrayLike, log_mass: Optional[np.ndarray] = None,
) -> np.ndarray:
    mu, sigma, alpha, beta = _standardized_bounds(mu, sigma)
    if log_mass is None:
        log_mass = _log_normal_mass(alpha, beta)
    t = np.asarray(t, dtype=float)
    z = (np.clip(t, 0.0, 1.0) - mu) / sigma
    z = np.maximum(z, alpha)  # guards rounding at t == 0
    cdf = np.exp(_log_normal_mass(alpha, z) - log_mass)
    return np.where(t <= 0.0, 0.0, np.where(t >= 1.0, 1.0, np.clip(cdf, 0.0, 1.0)))


def truncnorm_ppf_array(mu: ArrayLike, sigma: ArrayLike, u: ArrayLike) -> np.ndarray:
    """Quantile function; u in [0, 1]."""
    mu, sigma, alpha, beta = _standardized_bounds(mu, sigma)
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        # upper tail: Φ(-z) = Φ(-α) − u (Φ(-α) − Φ(-β))
        log_sf_alpha = log_ndtr(-alpha)
        log_sf = log_sf_alpha + np.log1p(u * np.expm1(log_ndtr(-beta) - log_sf_alpha))
        z_upper = -ndtri_exp(log_sf)
        # lower tail: Φ(z) = Φ(β) (e + u (1 − e)), e = Φ(α) / Φ(β)
        log_cdf_beta = log_ndtr(beta)
        ratio = np.exp(log_ndtr(alpha) - log_cdf_beta)
        z_lower = ndtri_exp(log_cdf_beta + np.log(ratio + u * (1.0 - ratio)))
        cdf_alpha = ndtr(alpha)
        z_middle = ndtri(cdf_alpha + u * (ndtr(beta) - cdf_alpha))
    z = np.where(alpha > 0.0, z_upper, np.where(beta < 0.0, z_lower, z_middle))
    return np.clip(mu + sigma * z, 0.0, 1.0)


def truncnorm_mean_array(mu: ArrayLike, sigma: ArrayLike) -> np.ndarray:
    mu, sigma, alpha, beta = _standardized_bounds(mu, sigma)
    return mu + sigma * _normal_ratio(alpha, beta)


def truncnorm_match_mean_array(target_mean: ArrayLike, sigma: ArrayLike) -> np.ndarray:
    """Locations whose truncated means equal `target_mean` (clamped), by bisection.

    The truncated mean is strictly increasing in the location. The bracket
    starts at [−10σ, 1 + 10σ] and is widened for targets that need a location
    further out (wide σ with a target close to 0 or 1).
    """
    target, sigma = np.broadcast_arrays(clamp_support(target_mean), np.asarray(sigma, dtype=float))
    lo = -10.0 * sigma
    hi = 1.0 + 10.0 * sigma
    for _ in range(_BRACKET_WIDENINGS):
        too_high = truncnorm_mean_array(lo, sigma) > target
        too_low = truncnorm_mean_array(hi, sigma) < target
        if not (too_high.any() or too_low.any()):
            break
        width = hi - lo
        lo = np.where(too_high, lo - width, lo)
        hi = np.where(too_low, hi + width, hi)
    else:
        raise RuntimeError("Could not bracket the truncated-normal location for the requested means.")

    for _ in range(MATCH_MAX_STEPS):
        mid = 0.5 * (lo + hi)
        below = truncnorm_mean_array(mid, sigma) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        mid = 0.5 * (lo + hi)
        resolved = (hi - lo <= MATCH_TOLERANCE * np.maximum(1.0, np.abs(mid))) | (mid == lo) | (mid == hi)
        if resolved.all():
            return mid
    raise RuntimeError(
        f"Truncated-normal mean matching did not converge in {MATCH_MAX_STEPS} bisection steps."
    )


# ── Beta array kernels ─────────────────────────────────────────────────────────

def beta_pdf_array(a: ArrayLike, b: ArrayLike, t: ArrayLike) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= 1.0)
    tc = np.clip(t, 0.0, 1.0)
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        density = np.exp(xlogy(a - 1.0, tc) + xlog1py(b - 1.0, -tc) - betaln(a, b))
    return np.where(inside, density, 0.0)


def beta_cdf_array(a: ArrayLike, b: ArrayLike, t: ArrayLike) -> np.ndarray:
    return betainc(a, b, np.clip(np.asarray(t, dtype=float), 0.0, 1.0))


def beta_ppf_array(a: ArrayLike, b: ArrayLike, u: ArrayLike) -> np.ndarray:
    return betaincinv(a, b, np.clip(np.asarray(u, dtype=float), 0.0, 1.0))


def beta_shapes_from_support(nu: ArrayLike, class_count: int):
    """a = Mν, b = M(1 − ν) on clamped supports, so Var = ν(1 − ν)/(M + 1).

    Shapes below BETA_SHAPE_FLOOR are lifted by rescaling a and b together,
    which keeps the mean a/(a + b) equal to ν.
    """
    nu = clamp_support(nu)
    a = class_count * nu
    b = class_count * (1.0 - nu)
    lift = np.maximum(1.0, BETA_SHAPE_FLOOR / np.minimum(a, b))
    return a * lift, b * lift


# ── Spec-level operations ──────────────────────────────────────────────────────

def truncnorm_pdf(spec: TruncNormSpec, t: ArrayLike) -> ArrayLike:
    return _as_output(truncnorm_pdf_array(spec.location, spec.scale, t))


def truncnorm_cdf(spec: TruncNormSpec, t: ArrayLike) -> ArrayLike:
    return _as_output(truncnorm_cdf_array(spec.location, spec.scale, t))


def truncnorm_ppf(spec: TruncNormSpec, u: ArrayLike) -> ArrayLike:
    return _as_output(truncnorm_ppf_array(spec.location, spec.scale, u))


def truncnorm_mean(spec: TruncNormSpec) -> float:
    return float(truncnorm_mean_array(spec.location, spec.scale))


def truncnorm_match_mean(target_mean: float, sigma: float) -> TruncNormSpec:
    """Spec whose truncated mean equals the clamped target."""
    return TruncNormSpec(location=float(truncnorm_match_mean_array(target_mean, sigma)), scale=float(sigma))


def truncnorm_sample(spec: TruncNormSpec, rng: SeededRng, size=None) -> ArrayLike:
    """Inverse-cdf draws; advances `rng`."""
    return _as_output(truncnorm_ppf_array(spec.location, spec.scale, rng.generator.random(size)))


def beta_pdf(spec: BetaSpec, t: ArrayLike) -> ArrayLike:
    return _as_output(beta_pdf_array(spec.a, spec.b, t))


def beta_cdf(spec: BetaSpec, t: ArrayLike) -> ArrayLike:
    return _as_output(beta_cdf_array(spec.a, spec.b, t))


def beta_sample(spec: BetaSpec, rng: SeededRng, size=None) -> ArrayLike:
    return _as_output(beta_ppf_array(spec.a, spec.b, rng.generator.random(size)))


def rrc_sd(nu: ArrayLike, class_count: int, gamma: float) -> ArrayLike:
    """Scale heuristic (ν(1 − ν)/(M + 1))^γ, floored at SD_FLOOR."""
    nu = np.asarray(nu, dtype=float)
    sd = np.power(nu * (1.0 - nu) / (class_count + 1.0), gamma)
    return _as_output(np.maximum(sd, SD_FLOOR))
