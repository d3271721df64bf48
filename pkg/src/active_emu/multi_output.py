"""Independent per-output GPs over a shared set of input nodes.

Each output row gets its own bandwidth; the P models share the training
inputs, which are normalized to the unit hypercube once per fit.  All
single-output operations are applied in normalized coordinates, so gradient
norms reported here are with respect to unit-cube units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gp
from .gp import Dataset, GpModel, IllConditionedError
from .kernels import KernelParams
from .optimize import OptimizerConfig
from .seeding import derive_seed

# Bandwidth used when a model must be built from a single node, where no
# selection strategy applies.
_SINGLE_NODE_BANDWIDTH = 1.0


@dataclass(frozen=True)
class MultiGpModel:
    """P independently fitted GPs over one dataset; immutable."""

    dataset: Dataset
    models: tuple[GpModel, ...]

    @property
    def n_outputs(self) -> int:
        return len(self.models)

    @property
    def bandwidths(self) -> tuple[float, ...]:
        return tuple(m.params.bandwidth for m in self.models)

    def normalize(self, x) -> np.ndarray:
        return self.dataset.normalize(x)


def fit_all(
    dataset: Dataset,
    hyper_strategy: str = "marginal-likelihood",
    nugget_policy: float | str = 0.0,
    seed: int = 0,
    hyper_optimizer: OptimizerConfig | None = None,
    bandwidths=None,
) -> MultiGpModel:
    """Fit one GP per output row of the dataset.

    Hyperparameters are selected independently per output (deterministic
    given `seed`); pass `bandwidths` to skip selection and fit with fixed
    kernel parameters.
    """
    if bandwidths is None and dataset.n_nodes < 2:
        raise ValueError("hyperparameter selection needs at least two nodes")
    Xn = dataset.normalize(dataset.X)
    models = []
    for p in range(dataset.n_outputs):
        y = dataset.Y[p]
        try:
            if bandwidths is not None:
                b = bandwidths[p]
                params = b if isinstance(b, KernelParams) else KernelParams(float(b))
                nugget = 0.0 if nugget_policy == "learned" else float(nugget_policy)
            else:
                params, nugget = gp.select_hyperparameters(
                    Xn,
                    y,
                    strategy=hyper_strategy,
                    nugget_policy=nugget_policy,
                    seed=derive_seed(seed, p),
                    optimizer=hyper_optimizer,
                )
            models.append(gp.fit(Xn, y, params, nugget))
        except IllConditionedError as exc:
            raise IllConditionedError(
                f"output {p}: {exc}", condition_estimate=exc.condition_estimate
            ) from exc
    return MultiGpModel(dataset=dataset, models=tuple(models))


def fit_single_node(dataset: Dataset, nugget: float = 0.0) -> MultiGpModel:
    """Degenerate fit for a one-node dataset (fixed default bandwidth)."""
    params = [KernelParams(_SINGLE_NODE_BANDWIDTH)] * dataset.n_outputs
    return fit_all(dataset, nugget_policy=nugget, bandwidths=params)


def predict_all(model: MultiGpModel, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-output (means, variances, gradient norms) at one raw input point."""
    xn = model.normalize(np.asarray(x, dtype=float).ravel())
    means = np.array([gp.predict_mean(m, xn) for m in model.models])
    variances = np.array([gp.predict_variance(m, xn) for m in model.models])
    grad_norms = np.array([gp.mean_gradient_norm(m, xn) for m in model.models])
    return means, variances, grad_norms


def predict_mean_matrix(model: MultiGpModel, X) -> np.ndarray:
    """Predictive means for all outputs at the columns of X (raw); (P, n)."""
    Xn = model.dataset.normalize(np.atleast_2d(np.asarray(X, dtype=float)))
    return np.vstack([gp.predict_mean_many(m, Xn) for m in model.models])
