"""Randomized Reference Classifier.

A support vector ν is modelled by independent random supports Δ_i on [0, 1]
with E[Δ_i] = ν_i, and the RRC output is P_m = Pr[Δ_m is the maximum].

The integral P_m = ∫ f_m(t) Π_{j≠m} F_j(t) dt is evaluated after the
substitution u = F_m(t), i.e. P_m = ∫₀¹ Π_{j≠m} F_j(F_m⁻¹(u)) du. The integrand
is bounded by 1 whatever the densities look like, which keeps the adaptive
quadrature stable for spike-like components (σ at its floor) and for beta
densities with endpoint singularities.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from .core import SeededRng, SupportVector
from .dist import (
    BetaSpec,
    TruncNormSpec,
    beta_cdf_array,
    beta_ppf_array,
    beta_shapes_from_support,
    clamp_support,
    rrc_sd,
    truncnorm_cdf_array,
    truncnorm_log_mass_array,
    truncnorm_match_mean_array,
    truncnorm_ppf_array,
)
from .validation import check_gamma, check_quadrature_finite, check_quadrature_panels

QUADRATURE_EPSABS = 1e-8
QUADRATURE_ORDER = 10        # Gauss–Legendre nodes per panel
QUADRATURE_PANELS = 2
QUADRATURE_MIN_WIDTH = 2.0 ** -40
QUADRATURE_LIMIT = 2 ** 14   # pending panels per support vector
LOG_PRODUCT_THRESHOLD = 20   # class counts above this multiply cdfs in log space
EVALUATION_BLOCK = 2 ** 20   # cdf values per numpy pass
MC_BLOCK = 1_000_000

_NODES, _WEIGHTS = leggauss(QUADRATURE_ORDER)


class Variant(str, Enum):
    BETA = "beta"
    TRUNCNORM = "truncnorm"


class MeanMode(str, Enum):
    MOMENT = "moment"  # solve μ so that the truncated mean equals ν
    NAIVE = "naive"    # μ = ν


@dataclass(frozen=True, eq=False)
class RrcBatch:
    """Per-class distribution parameters for B support vectors at once.

    `first`/`second` are (B, M) arrays holding (μ, σ) for the truncated normal
    and (a, b) for the beta variant.
    """
    variant: Variant
    gamma: float
    first: np.ndarray
    second: np.ndarray

    @property
    def batch_size(self) -> int:
        return self.first.shape[0]

    @property
    def class_count(self) -> int:
        return self.first.shape[1]

    def row(self, index: int) -> "RrcModel":
        return RrcModel(self.variant, self.gamma, self.first[index].copy(), self.second[index].copy())


@dataclass(frozen=True, eq=False)
class RrcModel:
    """RRC for a single support vector."""
    variant: Variant
    gamma: float
    first: np.ndarray
    second: np.ndarray

    @property
    def class_count(self) -> int:
        return self.first.size

    @property
    def specs(self) -> Tuple[Union[TruncNormSpec, BetaSpec], ...]:
        if self.variant is Variant.TRUNCNORM:
            return tuple(TruncNormSpec(float(m), float(s)) for m, s in zip(self.first, self.second))
        return tuple(BetaSpec(float(a), float(b)) for a, b in zip(self.first, self.second))

    def as_batch(self) -> RrcBatch:
        return RrcBatch(self.variant, self.gamma, self.first[None, :], self.second[None, :])


def build_rrc_batch(
    supports: np.ndarray,
    variant: Variant,
    gamma: float = 0.5,
    mean_mode: MeanMode = MeanMode.MOMENT,
) -> RrcBatch:
    """Distribution parameters for every row of a (B, M) support matrix."""
    variant = Variant(variant)
    supports = np.atleast_2d(np.asarray(supports, dtype=float))
    class_count = supports.shape[1]
    if variant is Variant.TRUNCNORM:
        check_gamma(gamma)
        scale = np.asarray(rrc_sd(supports, class_count, gamma), dtype=float)
        if MeanMode(mean_mode) is MeanMode.NAIVE:
            location = clamp_support(supports)
        else:
            location = truncnorm_match_mean_array(supports, scale)
        return RrcBatch(variant, float(gamma), location, scale)
    a, b = beta_shapes_from_support(supports, class_count)
    return RrcBatch(variant, float(gamma), a, b)


def build_rrc(
    support: SupportVector,
    variant: Variant,
    gamma: float = 0.5,
    mean_mode: MeanMode = MeanMode.MOMENT,
) -> RrcModel:
    values = support.values if isinstance(support, SupportVector) else SupportVector(support).values
    return build_rrc_batch(values[None, :], variant, gamma, mean_mode).row(0)


def _ppf_kernel(variant: Variant):
    return truncnorm_ppf_array if variant is Variant.TRUNCNORM else beta_ppf_array


class _Integrand:
    """u ↦ Π_{j≠m} F_j(F_m⁻¹(u)) for any selection of rows of a batch.

    Truncated-normal masses on [0, 1] are computed once per batch.
    """

    def __init__(self, batch: RrcBatch):
        self.variant = batch.variant
        self.first, self.second = batch.first, batch.second
        self.class_count = batch.class_count
        self.quantile_class, self.other_class = np.nonzero(~np.eye(self.class_count, dtype=bool))
        self.log_space = self.class_count > LOG_PRODUCT_THRESHOLD
        self.log_mass = truncnorm_log_mass_array(self.first, self.second) if self.variant is Variant.TRUNCNORM else None

    def __call__(self, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
        """(I,) row indices and (I, N) nodes in, (I, N, M) integrand values out."""
        first, second = self.first[rows], self.second[rows]
        t = _ppf_kernel(self.variant)(first[:, None, :], second[:, None, :], u[:, :, None])  # F_m⁻¹(u)
        others = (slice(None), None, self.other_class)
        at = t[:, :, self.quantile_class]
        if self.log_mass is not None:
            cdfs = truncnorm_cdf_array(first[others], second[others], at, self.log_mass[rows][others])
        else:
            cdfs = beta_cdf_array(first[others], second[others], at)
        cdfs = cdfs.reshape(*u.shape, self.class_count, self.class_count - 1)  # F_j(F_m⁻¹(u)), j ≠ m
        if self.log_space:
            with np.errstate(divide='ignore'):
                return np.exp(np.log(cdfs).sum(axis=3))
        return cdfs.prod(axis=3)


def _panel_integrals(integrand: _Integrand, rows: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Gauss–Legendre integral of every (row, [left, right]) panel, (I, M)."""
    per_pass = max(1, EVALUATION_BLOCK // (QUADRATURE_ORDER * integrand.class_count ** 2))
    parts = []
    for start in range(0, rows.size, per_pass):
        stop = start + per_pass
        half = 0.5 * (right[start:stop] - left[start:stop])
        centre = 0.5 * (right[start:stop] + left[start:stop])
        values = integrand(rows[start:stop], centre[:, None] + half[:, None] * _NODES)
        parts.append(half[:, None] * np.tensordot(values, _WEIGHTS, axes=([1], [0])))
    if not parts:
        return np.empty((0, integrand.class_count))
    return np.concatenate(parts)


def class_probabilities_batch(batch: RrcBatch) -> np.ndarray:
    """(B, M) matrix of Pr[Δ_m is the maximum], rows renormalised to sum to 1.

    Every row starts on QUADRATURE_PANELS equal panels of [0, 1]. A panel is
    accepted when its two halves agree with the whole to within
    QUADRATURE_EPSABS times its width, otherwise both halves are refined, so
    the accepted panels of a row carry at most QUADRATURE_EPSABS in total.
    Panels narrower than QUADRATURE_MIN_WIDTH and non-finite panels are
    accepted as they are. All pending panels of all rows are evaluated in one
    vectorised pass per level.
    """
    size, class_count = batch.batch_size, batch.class_count
    if size == 0:
        return np.empty((0, class_count))
    integrand = _Integrand(batch)
    edges = np.linspace(0.0, 1.0, QUADRATURE_PANELS + 1)
    rows = np.repeat(np.arange(size), QUADRATURE_PANELS)
    left, right = np.tile(edges[:-1], size), np.tile(edges[1:], size)
    whole = _panel_integrals(integrand, rows, left, right)
    totals = np.zeros((size, class_count))
    level = 0
    while rows.size:
        middle = 0.5 * (left + right)
        lower = _panel_integrals(integrand, rows, left, middle)
        upper = _panel_integrals(integrand, rows, middle, right)
        halves = lower + upper
        width = right - left
        error = np.abs(halves - whole).max(axis=1)
        accepted = (error <= QUADRATURE_EPSABS * width) | (width <= QUADRATURE_MIN_WIDTH) | ~np.isfinite(error)
        np.add.at(totals, rows[accepted], halves[accepted])
        pending = ~accepted
        rows = np.concatenate([rows[pending], rows[pending]])
        left, right = np.concatenate([left[pending], middle[pending]]), np.concatenate([middle[pending], right[pending]])
        whole = np.concatenate([lower[pending], upper[pending]])
        level += 1
        check_quadrature_panels(rows.size, size * QUADRATURE_LIMIT)
    logging.debug("Integrated %d support vector(s) in %d refinement level(s)", size, level)
    check_quadrature_finite(totals)
    probabilities = np.clip(totals, 0.0, None)
    return probabilities / probabilities.sum(axis=1, keepdims=True)


def class_probabilities(model: RrcModel) -> np.ndarray:
    return class_probabilities_batch(model.as_batch())[0]


def rrc_probabilities(
    supports: np.ndarray,
    variant: Variant,
    gamma: float = 0.5,
    mean_mode: MeanMode = MeanMode.MOMENT,
) -> np.ndarray:
    """Support matrix in, RRC probability matrix out; repeated rows are integrated once."""
    supports = np.atleast_2d(np.asarray(supports, dtype=float))
    if supports.shape[0] == 0:
        return class_probabilities_batch(build_rrc_batch(supports, variant, gamma, mean_mode))
    distinct, inverse = np.unique(supports, axis=0, return_inverse=True)
    probabilities = class_probabilities_batch(build_rrc_batch(distinct, variant, gamma, mean_mode))
    return probabilities[inverse.reshape(-1)]


def class_probabilities_mc(
    model: RrcModel,
    samples: int,
    rng: SeededRng,
    normalize: bool = False,
) -> np.ndarray:
    """Monte Carlo estimate from joint independent draws of every Δ_i.

    By default: the empirical frequency of each class being the maximum, the
    estimator of `class_probabilities`. With `normalize` every joint draw is
    rescaled to sum to 1 and the result is the mean rescaled draw, i.e. the
    share each class keeps once the supports are forced onto the simplex.
    """
    if samples < 1:
        raise ValueError(f"Monte Carlo evaluation needs at least one sample, got {samples}.")
    ppf = _ppf_kernel(model.variant)
    accumulated = np.zeros(model.class_count)
    remaining = samples
    while remaining:
        block = min(remaining, MC_BLOCK)
        draws = ppf(model.first[None, :], model.second[None, :], rng.generator.random((block, model.class_count)))
        if normalize:
            totals = draws.sum(axis=1, keepdims=True)
            shares = np.full_like(draws, 1.0 / model.class_count)
            accumulated += np.divide(draws, totals, out=shares, where=totals > 0).sum(axis=0)
        else:
            accumulated += np.bincount(np.argmax(draws, axis=1), minlength=model.class_count)
        remaining -= block
    return accumulated / samples
