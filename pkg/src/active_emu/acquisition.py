"""Acquisition functions: tempered product of a geometry term (per-output
gradient norms) and a diversity term (per-output predictive variances),
optionally weighted by a truncated-Gaussian input prior.

Six variants arise from combining the per-output terms by sum or product:
SD, PD, SDxSG, SDxPG, PDxSG, PDxPG.  The value is zero at every node in
interpolation mode; in regression mode the diversity term defaults to the
noise-free variance so that the same holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import gp
from .multi_output import MultiGpModel

_VARIANT_OPS = {
    "SD": ("sum", "none"),
    "PD": ("product", "none"),
    "SDxSG": ("sum", "sum"),
    "SDxPG": ("sum", "product"),
    "PDxSG": ("product", "sum"),
    "PDxPG": ("product", "product"),
}

VARIANT_NAMES = tuple(_VARIANT_OPS)


@dataclass(frozen=True)
class TemperingSchedule:
    """Exponent schedule beta_t in [0, 1], non-decreasing in t."""

    kind: str  # constant | one-minus-inverse-t | one-minus-exp
    beta: float = 1.0  # for constant
    gamma: float = 1.0  # for one-minus-exp

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "one-minus-inverse-t", "one-minus-exp"):
            raise ValueError(f"unknown tempering kind: {self.kind!r}")
        if self.kind == "constant" and not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"constant beta must lie in [0, 1], got {self.beta}")
        if self.kind == "one-minus-exp" and self.gamma < 0.0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")

    @classmethod
    def constant(cls, beta: float) -> "TemperingSchedule":
        return cls(kind="constant", beta=beta)

    @classmethod
    def one_minus_inverse_t(cls) -> "TemperingSchedule":
        return cls(kind="one-minus-inverse-t")

    @classmethod
    def one_minus_exp(cls, gamma: float) -> "TemperingSchedule":
        return cls(kind="one-minus-exp", gamma=gamma)


def beta_at(schedule: TemperingSchedule, t: int) -> float:
    """Tempering exponent at iteration t >= 1."""
    if t < 1:
        raise ValueError(f"iteration index must be >= 1, got {t}")
    if schedule.kind == "constant":
        return schedule.beta
    if schedule.kind == "one-minus-inverse-t":
        return 1.0 - 1.0 / t
    return 1.0 - math.exp(-schedule.gamma * t)


@dataclass(frozen=True)
class InputPrior:
    """Independent truncated Gaussians per input dimension."""

    mu: np.ndarray
    sigma: np.ndarray
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self) -> None:
        for name in ("mu", "sigma", "low", "high"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        shapes = {self.mu.shape, self.sigma.shape, self.low.shape, self.high.shape}
        if len(shapes) != 1:
            raise ValueError("mu, sigma, low, high must all have the same length")
        if not np.all(self.sigma > 0.0):
            raise ValueError("sigma must be positive")
        if not np.all(self.high > self.low):
            raise ValueError("each dimension must satisfy min < max")
        zl = (self.low - self.mu) / self.sigma
        zh = (self.high - self.mu) / self.sigma
        mass = ndtr(zh) - ndtr(zl)
        object.__setattr__(self, "_log_norm", np.log(self.sigma) + 0.5 * np.log(2.0 * np.pi) + np.log(mass))
        object.__setattr__(self, "_cdf_low", ndtr(zl))
        object.__setattr__(self, "_cdf_high", ndtr(zh))

    @property
    def dimension(self) -> int:
        return self.mu.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        return bool(np.all(x >= self.low) and np.all(x <= self.high))

    def density(self, x) -> float:
        """Joint truncated-normal density; zero outside the box."""
        x = np.asarray(x, dtype=float).ravel()
        if not self.contains(x):
            return 0.0
        z = (x - self.mu) / self.sigma
        return float(np.exp(np.sum(-0.5 * z * z - self._log_norm)))

    def grad_log_density(self, x) -> np.ndarray:
        """Gradient of log density inside the box: -(x - mu) / sigma^2."""
        x = np.asarray(x, dtype=float).ravel()
        return -(x - self.mu) / self.sigma**2


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which diversity/geometry combination to use, plus tempering and prior.

    geometry_op 'none' drops the gradient factor entirely (pure diversity).
    strict_zero_at_nodes keeps the diversity term exactly zero at nodes in
    regression mode by using the noise-free variance; set it False to use
    the full predictive variance including the nugget.
    """

    diversity_op: str = "sum"  # sum | product
    geometry_op: str = "none"  # sum | product | none
    tempering: TemperingSchedule = TemperingSchedule.one_minus_inverse_t()
    prior: InputPrior | None = None
    strict_zero_at_nodes: bool = True

    def __post_init__(self) -> None:
        if self.diversity_op not in ("sum", "product"):
            raise ValueError(f"diversity_op must be sum or product, got {self.diversity_op!r}")
        if self.geometry_op not in ("sum", "product", "none"):
            raise ValueError(f"geometry_op must be sum, product or none, got {self.geometry_op!r}")

    @property
    def variant(self) -> str:
        for name, ops in _VARIANT_OPS.items():
            if ops == (self.diversity_op, self.geometry_op):
                return name
        raise AssertionError("unreachable")

    @classmethod
    def from_variant(cls, name: str, **kwargs) -> "AcquisitionSpec":
        if name not in _VARIANT_OPS:
            raise ValueError(f"unknown acquisition variant {name!r}; expected one of {VARIANT_NAMES}")
        d_op, g_op = _VARIANT_OPS[name]
        return cls(diversity_op=d_op, geometry_op=g_op, **kwargs)


def _variance(model_p, xn, strict: bool) -> float:
    if strict:
        return gp.noise_free_variance(model_p, xn)
    return gp.predict_variance(model_p, xn)


def _combine(values: np.ndarray, op: str) -> float:
    if op == "sum":
        return float(np.sum(values))
    if np.any(values <= 0.0):
        return 0.0
    # log-space product; values can be very small for many outputs
    return float(np.exp(np.sum(np.log(values))))


def diversity(model: MultiGpModel, x, op: str, strict: bool = True) -> float:
    """Combined per-output predictive variances at a raw input point."""
    xn = model.normalize(np.asarray(x, dtype=float).ravel())
    values = np.array([_variance(m, xn, strict) for m in model.models])
    return _combine(values, op)


def geometry(model: MultiGpModel, x, op: str) -> float:
    """Combined per-output predictive-mean gradient norms at a raw point."""
    xn = model.normalize(np.asarray(x, dtype=float).ravel())
    values = np.array([gp.mean_gradient_norm(m, xn) for m in model.models])
    return _combine(values, op)


def acquisition_value(spec: AcquisitionSpec, model: MultiGpModel, x, t: int) -> float:
    """[G_t(x)]^beta_t * D_t(x), times the prior density when configured.

    beta_t = 0 (and geometry_op 'none') reduce to pure diversity; 0^0 is
    taken as 1 so that reduction is exact.
    """
    x = np.asarray(x, dtype=float).ravel()
    prior_weight = 1.0
    if spec.prior is not None:
        prior_weight = spec.prior.density(x)
        if prior_weight == 0.0:
            return 0.0
    xn = model.normalize(x)
    d_values = np.array([_variance(m, xn, spec.strict_zero_at_nodes) for m in model.models])
    d_term = _combine(d_values, spec.diversity_op)
    beta = beta_at(spec.tempering, t)
    if spec.geometry_op == "none" or beta == 0.0:
        return d_term * prior_weight
    if d_term == 0.0:
        return 0.0
    g_values = np.array([gp.mean_gradient_norm(m, xn) for m in model.models])
    g_term = _combine(g_values, spec.geometry_op)
    return g_term**beta * d_term * prior_weight


def acquisition_gradient(spec: AcquisitionSpec, model: MultiGpModel, x, t: int) -> np.ndarray:
    """Analytic gradient of acquisition_value with respect to the raw input.

    Per-output factors are differentiated in normalized coordinates and
    mapped back through the affine normalization.  Wherever a multiplicative
    factor is exactly zero (at nodes, in flat regions, outside the prior
    box) the zero vector is returned: the acquisition is flat or nonsmooth
    there and the optimizer treats it as a plateau.
    """
    x = np.asarray(x, dtype=float).ravel()
    dimension = model.dataset.dimension
    zeros = np.zeros(dimension)

    prior_weight = 1.0
    prior_grad_log = np.zeros(dimension)
    if spec.prior is not None:
        prior_weight = spec.prior.density(x)
        if prior_weight == 0.0:
            return zeros
        prior_grad_log = spec.prior.grad_log_density(x)

    widths = model.dataset.input_bounds[:, 1] - model.dataset.input_bounds[:, 0]
    xn = model.normalize(x)
    strict = spec.strict_zero_at_nodes

    d_values = np.empty(model.n_outputs)
    d_grads = np.empty((model.n_outputs, dimension))
    for p, m in enumerate(model.models):
        d_values[p] = _variance(m, xn, strict)
        if strict:
            d_grads[p] = gp.noise_free_variance_gradient(m, xn)
        else:
            d_grads[p] = gp.variance_gradient(m, xn)
    d_term, d_grad = _combine_with_gradient(d_values, d_grads, spec.diversity_op)

    beta = beta_at(spec.tempering, t)
    if spec.geometry_op == "none" or beta == 0.0:
        if d_term == 0.0:
            return zeros
        total = d_grad / widths + d_term * prior_grad_log
        return total * prior_weight

    if d_term == 0.0:
        return zeros

    g_values = np.empty(model.n_outputs)
    g_grads = np.empty((model.n_outputs, dimension))
    for p, m in enumerate(model.models):
        g_values[p] = gp.mean_gradient_norm(m, xn)
        g_grads[p] = gp.mean_gradient_norm_gradient(m, xn)
    g_term, g_grad = _combine_with_gradient(g_values, g_grads, spec.geometry_op)
    if g_term == 0.0:
        return zeros

    value = g_term**beta * d_term * prior_weight
    log_grad = beta * (g_grad / g_term) / widths + (d_grad / d_term) / widths + prior_grad_log
    return value * log_grad


def _combine_with_gradient(values: np.ndarray, grads: np.ndarray, op: str) -> tuple[float, np.ndarray]:
    """Value and gradient of the sum or product of per-output factors."""
    if op == "sum":
        return float(np.sum(values)), np.sum(grads, axis=0)
    if np.any(values <= 0.0):
        return 0.0, np.zeros(grads.shape[1])
    value = float(np.exp(np.sum(np.log(values))))
    return value, value * np.sum(grads / values[:, np.newaxis], axis=0)
