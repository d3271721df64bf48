"""Single-output Gaussian-process interpolation and regression.

Zero-mean GP with the exponentiated quadratic kernel: predictive mean and
variance, analytic derivatives of both, and bandwidth selection either by
marginal likelihood or by the largest bandwidth that keeps the kernel
matrix numerically invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .kernels import KernelParams, cross_kernel, kernel_matrix, squared_distances
from .optimize import AnnealingConfig, OptimizerConfig, maximize

# Pairwise node distance below which two nodes count as duplicates
# (normalized input units).
DUPLICATE_TOLERANCE = 1e-12

# Bandwidth search range in normalized input units, shared by both
# hyperparameter strategies.
BANDWIDTH_GRID = np.geomspace(1e-2, 1e1, 50)

# Condition-number cap for the max-stable-bandwidth strategy.
CONDITION_BOUND = 1e6

LEARNED_NUGGET_BOUNDS = (1e-8, 1e-1)

# Round-off window for clamping tiny negative predictive variances.
_VARIANCE_CLAMP = 1e-12
# Wider window for the deliberately unregularized solve behind the
# acquisition's zero-at-nodes diversity term.
_NOISE_FREE_CLAMP = 1e-6


class IllConditionedError(ValueError):
    """Kernel matrix factorization failed; carries a condition estimate."""

    def __init__(self, message: str, condition_estimate: float | None = None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


@dataclass(frozen=True)
class Dataset:
    """Evaluated nodes: inputs X (D x m), outputs Y (P x m), and the input box."""

    X: np.ndarray
    Y: np.ndarray
    input_bounds: np.ndarray  # (D, 2) rows of [low, high]

    def __post_init__(self) -> None:
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        bounds = np.asarray(self.input_bounds, dtype=float)
        if bounds.shape != (X.shape[0], 2):
            raise ValueError(f"input_bounds must have shape ({X.shape[0]}, 2), got {bounds.shape}")
        if not np.all(bounds[:, 1] > bounds[:, 0]):
            raise ValueError("each input bound must satisfy low < high")
        if X.shape[1] != Y.shape[1]:
            raise ValueError(f"X has {X.shape[1]} nodes but Y has {Y.shape[1]} output columns")
        lo, hi = bounds[:, 0:1], bounds[:, 1:2]
        if np.any(X < lo - 1e-9) or np.any(X > hi + 1e-9):
            raise ValueError("nodes must lie within input_bounds")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "input_bounds", bounds)
        Xn = self.normalize(X)
        if X.shape[1] > 1:
            sq = squared_distances(Xn, Xn)
            np.fill_diagonal(sq, np.inf)
            if np.min(sq) < DUPLICATE_TOLERANCE**2:
                raise ValueError("duplicate nodes (normalized distance < 1e-12)")

    @property
    def dimension(self) -> int:
        return self.X.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.Y.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.X.shape[1]

    def normalize(self, x) -> np.ndarray:
        """Map raw coordinates into the unit hypercube."""
        x = np.asarray(x, dtype=float)
        lo = self.input_bounds[:, 0]
        width = self.input_bounds[:, 1] - lo
        if x.ndim == 2:  # column points
            return (x - lo[:, np.newaxis]) / width[:, np.newaxis]
        return (x - lo) / width

    def denormalize(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo = self.input_bounds[:, 0]
        width = self.input_bounds[:, 1] - lo
        if x.ndim == 2:
            return lo[:, np.newaxis] + x * width[:, np.newaxis]
        return lo + x * width

    def with_node(self, x, y) -> "Dataset":
        """Append one node; rejects duplicates via the Dataset invariant."""
        x = np.asarray(x, dtype=float).reshape(self.dimension, 1)
        y = np.asarray(y, dtype=float).reshape(self.n_outputs, 1)
        return Dataset(np.hstack([self.X, x]), np.hstack([self.Y, y]), self.input_bounds)


@dataclass(frozen=True)
class GpModel:
    """Fitted single-output GP; immutable after `fit`."""

    params: KernelParams
    nugget: float
    alpha: np.ndarray  # solves (K + nugget I) alpha = y
    factor: tuple  # Cholesky factor of K + nugget I (scipy cho_factor)
    train_inputs: np.ndarray  # D x m
    train_outputs: np.ndarray  # (m,)
    noise_free_factor: tuple | None  # Cholesky of K alone; None if unobtainable

    @property
    def n_nodes(self) -> int:
        return self.train_inputs.shape[1]


def fit(inputs, outputs, params: KernelParams, nugget: float = 0.0) -> GpModel:
    """Fit the GP weights for one output row.

    With nugget 0 this is exact interpolation; coincident or near-coincident
    nodes then make K singular and raise IllConditionedError.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(outputs, dtype=float).ravel()
    if X.shape[1] != y.size:
        raise ValueError(f"{X.shape[1]} input nodes but {y.size} outputs")
    if X.shape[1] < 1:
        raise ValueError("fit needs at least one node")
    if nugget < 0.0:
        raise ValueError(f"nugget must be nonnegative, got {nugget}")
    K = kernel_matrix(X, params, nugget)
    try:
        factor = cho_factor(K, lower=True)
    except LinAlgError as exc:
        cond = float(np.linalg.cond(K))
        raise IllConditionedError(
            f"kernel matrix is not positive definite (condition estimate {cond:.3e}); "
            "distinct nodes or a nugget are required",
            condition_estimate=cond,
        ) from exc
    alpha = cho_solve(factor, y)
    if nugget == 0.0:
        noise_free = factor
    else:
        noise_free = _noise_free_factor(X, params)
    return GpModel(
        params=params,
        nugget=float(nugget),
        alpha=alpha,
        factor=factor,
        train_inputs=X,
        train_outputs=y,
        noise_free_factor=noise_free,
    )


def _noise_free_factor(X, params: KernelParams):
    """Cholesky of the nugget-free K, escalating jitter if needed."""
    K = kernel_matrix(X, params, 0.0)
    for jitter in (0.0, 1e-12, 1e-10, 1e-8):
        try:
            return cho_factor(K + jitter * np.eye(K.shape[0]), lower=True)
        except LinAlgError:
            continue
    return None


def _kernel_vector(model: GpModel, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """k_x plus the difference vectors and squared distances to the nodes."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.train_inputs.shape[0]:
        raise ValueError(f"query point has dimension {x.size}, model expects {model.train_inputs.shape[0]}")
    diffs = x[np.newaxis, :] - model.train_inputs.T  # (m, D), row i = x - x_i
    sq = np.einsum("ij,ij->i", diffs, diffs)
    k_x = np.exp(-sq / (2.0 * model.params.bandwidth**2))
    return k_x, diffs, sq


def predict_mean(model: GpModel, x) -> float:
    """Predictive mean k_x^T alpha (reverts to the zero prior mean far away)."""
    k_x, _, _ = _kernel_vector(model, x)
    return float(k_x @ model.alpha)


def predict_variance(model: GpModel, x) -> float:
    """Predictive variance nugget + k(x,x) - k_x^T (K + nugget I)^{-1} k_x."""
    k_x, _, _ = _kernel_vector(model, x)
    w = cho_solve(model.factor, k_x)
    value = model.nugget + 1.0 - float(k_x @ w)
    if value >= 0.0:
        return value
    if value >= -_VARIANCE_CLAMP:
        return 0.0
    raise IllConditionedError(
        f"predictive variance {value} is more negative than round-off allows"
    )


def noise_free_variance(model: GpModel, x) -> float:
    """Variance with the nugget excluded everywhere: k(x,x) - k_x^T K^{-1} k_x.

    Exactly zero at training nodes, which is what the acquisition's
    zero-at-nodes condition requires; the node identity is enforced directly
    because Cholesky round-off cannot deliver an exact zero.
    """
    k_x, _, sq = _kernel_vector(model, x)
    if np.min(sq) <= DUPLICATE_TOLERANCE**2:
        return 0.0
    factor = model.noise_free_factor if model.noise_free_factor is not None else model.factor
    w = cho_solve(factor, k_x)
    value = 1.0 - float(k_x @ w)
    if value >= 0.0:
        return value
    if value >= -_NOISE_FREE_CLAMP:
        return 0.0
    raise IllConditionedError(
        f"noise-free variance {value} is more negative than round-off allows"
    )


def mean_gradient(model: GpModel, x) -> np.ndarray:
    """Gradient of the predictive mean: sum_i alpha_i grad_x k(x, x_i)."""
    k_x, diffs, _ = _kernel_vector(model, x)
    return -(diffs.T @ (k_x * model.alpha)) / model.params.bandwidth**2


def mean_gradient_norm(model: GpModel, x) -> float:
    """Euclidean norm of the predictive-mean gradient."""
    return float(np.linalg.norm(mean_gradient(model, x)))


def mean_gradient_norm_gradient(model: GpModel, x) -> np.ndarray:
    """Gradient of ||grad mean||; zero where the norm vanishes (< 1e-12)."""
    k_x, diffs, _ = _kernel_vector(model, x)
    b2 = model.params.bandwidth**2
    g = -(diffs.T @ (k_x * model.alpha)) / b2
    norm = float(np.linalg.norm(g))
    if norm < 1e-12:
        return np.zeros_like(g)
    # Hessian-vector product of the mean without forming the D x D Hessian:
    # H g = (1/b2^2) sum_i alpha_i k_i d_i (d_i . g) - (1/b2) (alpha . k) g.
    t = diffs @ g
    Hg = (diffs.T @ (model.alpha * k_x * t)) / b2**2 - (float(model.alpha @ k_x) / b2) * g
    return Hg / norm


def variance_gradient(model: GpModel, x) -> np.ndarray:
    """Analytic gradient of predict_variance (k(x,x) is constant here)."""
    k_x, diffs, _ = _kernel_vector(model, x)
    w = cho_solve(model.factor, k_x)
    return (2.0 / model.params.bandwidth**2) * (diffs.T @ (k_x * w))


def noise_free_variance_gradient(model: GpModel, x) -> np.ndarray:
    """Gradient of noise_free_variance."""
    k_x, diffs, _ = _kernel_vector(model, x)
    factor = model.noise_free_factor if model.noise_free_factor is not None else model.factor
    w = cho_solve(factor, k_x)
    return (2.0 / model.params.bandwidth**2) * (diffs.T @ (k_x * w))


def predict_mean_many(model: GpModel, X) -> np.ndarray:
    """Predictive means at the columns of X (D x n); returns shape (n,)."""
    K = cross_kernel(model.train_inputs, X, model.params)
    return K.T @ model.alpha


def log_marginal_likelihood(inputs, outputs, params: KernelParams, nugget: float = 0.0) -> float:
    """Standard zero-mean GP log marginal likelihood."""
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(outputs, dtype=float).ravel()
    K = kernel_matrix(X, params, nugget)
    factor = cho_factor(K, lower=True)
    alpha = cho_solve(factor, y)
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return -0.5 * float(y @ alpha) - 0.5 * log_det - 0.5 * y.size * np.log(2.0 * np.pi)


def _condition_estimate(factor) -> float:
    """Condition estimate of the factorized matrix via the Cholesky diagonal."""
    diag = np.diag(factor[0])
    return float((np.max(diag) / np.min(diag)) ** 2)


def _ml_objective(X, y, learn_nugget: bool, fixed_nugget: float):
    """Marginal-likelihood objective over log-space parameters.

    Precomputes the squared-distance matrix once; each evaluation is one
    exponentiation plus one Cholesky.
    """
    sq = squared_distances(X, X)
    np.fill_diagonal(sq, 0.0)
    m = y.size
    const = -0.5 * m * np.log(2.0 * np.pi)

    def objective(theta):
        bandwidth = np.exp(theta[0])
        nugget = np.exp(theta[1]) if learn_nugget else fixed_nugget
        K = np.exp(-sq / (2.0 * bandwidth**2))
        K[np.diag_indices_from(K)] = 1.0 + nugget
        try:
            factor = cho_factor(K, lower=True)
        except LinAlgError:
            return -1e300  # finite so the optimizer can walk away from it
        alpha = cho_solve(factor, y)
        log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
        return -0.5 * float(y @ alpha) - 0.5 * log_det + const

    return objective


def select_hyperparameters(
    inputs,
    outputs,
    strategy: str = "marginal-likelihood",
    nugget_policy: float | str = 0.0,
    seed: int = 0,
    optimizer: OptimizerConfig | None = None,
) -> tuple[KernelParams, float]:
    """Choose the kernel bandwidth (and optionally the nugget).

    strategy 'marginal-likelihood' maximizes the log marginal likelihood by
    simulated annealing over log-space bounds; 'max-stable-bandwidth' walks
    the bandwidth grid from the top and returns the largest value whose
    regularized kernel matrix stays below the condition bound.
    nugget_policy is either a fixed variance (float) or the string 'learned'.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(outputs, dtype=float).ravel()
    if X.shape[1] < 2:
        raise ValueError("hyperparameter selection needs at least two nodes")
    learn_nugget = nugget_policy == "learned"
    if not learn_nugget:
        fixed_nugget = float(nugget_policy)
        if fixed_nugget < 0.0:
            raise ValueError(f"nugget must be nonnegative, got {fixed_nugget}")
    else:
        fixed_nugget = 0.0

    if strategy == "max-stable-bandwidth":
        if learn_nugget:
            raise ValueError("max-stable-bandwidth requires a fixed nugget")
        for bandwidth in BANDWIDTH_GRID[::-1]:
            K = kernel_matrix(X, KernelParams(bandwidth), fixed_nugget)
            try:
                factor = cho_factor(K, lower=True)
            except LinAlgError:
                continue
            if _condition_estimate(factor) <= CONDITION_BOUND:
                return KernelParams(float(bandwidth)), fixed_nugget
        return KernelParams(float(BANDWIDTH_GRID[0])), fixed_nugget

    if strategy != "marginal-likelihood":
        raise ValueError(f"unknown hyperparameter strategy: {strategy!r}")

    bounds = [[np.log(BANDWIDTH_GRID[0]), np.log(BANDWIDTH_GRID[-1])]]
    if learn_nugget:
        bounds.append([np.log(LEARNED_NUGGET_BOUNDS[0]), np.log(LEARNED_NUGGET_BOUNDS[1])])
    if optimizer is None:
        # The log-space search is 1- or 2-dimensional and smooth; a short
        # annealing chain is enough.
        optimizer = OptimizerConfig(
            strategy="simulated-annealing",
            annealing=AnnealingConfig(iterations=200),
        )
    objective = _ml_objective(X, y, learn_nugget, fixed_nugget)
    theta, _ = maximize(objective, bounds, optimizer.with_seed(seed))
    bandwidth = float(np.exp(theta[0]))
    nugget = float(np.exp(theta[1])) if learn_nugget else fixed_nugget
    return KernelParams(bandwidth), nugget
