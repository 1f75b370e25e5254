"""Single-hidden-layer perceptron with a Levenberg-Marquardt trainer.

Architecture: tanh hidden layer, linear output with bias,

    f(x) = w2 . [tanh(w1 . [x; 1]); 1]

with w1 of shape (h, d+1) (bias column last) and w2 of length h+1 (bias
last). The flat parameter vector used by the trainer and the Jacobian is
always [w1 row-major, then w2]; tests and serialized models rely on that
order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .data import NormStats
from .errors import ConfigError, SolveFailure


@dataclass(frozen=True, eq=False)
class MlpParams:
    w1: np.ndarray  # (h, d+1), bias column last
    w2: np.ndarray  # (h+1,), bias last

    def __eq__(self, other):
        if not isinstance(other, MlpParams):
            return NotImplemented
        return np.array_equal(self.w1, other.w1) and np.array_equal(self.w2, other.w2)

    def __post_init__(self):
        w1 = np.ascontiguousarray(self.w1, dtype=float)
        w2 = np.ascontiguousarray(self.w2, dtype=float)
        if w1.ndim != 2 or w1.shape[0] < 1 or w1.shape[1] < 2:
            raise ValueError(f"w1 must be (h, d+1) with h,d >= 1, got {w1.shape}")
        if w2.shape != (w1.shape[0] + 1,):
            raise ValueError(f"w2 must have length h+1, got {w2.shape}")
        if not (np.isfinite(w1).all() and np.isfinite(w2).all()):
            raise ValueError("weights must be finite")
        w1.setflags(write=False)
        w2.setflags(write=False)
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)

    @property
    def d(self) -> int:
        return self.w1.shape[1] - 1

    @property
    def h(self) -> int:
        return self.w1.shape[0]

    @property
    def n_params(self) -> int:
        return self.w1.size + self.w2.size

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.w2])

    @classmethod
    def unflatten(cls, theta: np.ndarray, d: int, h: int) -> "MlpParams":
        w1 = theta[: h * (d + 1)].reshape(h, d + 1)
        w2 = theta[h * (d + 1):]
        return cls(w1, w2)


@dataclass(frozen=True)
class TrainConfig:
    hidden_units: int = 5
    max_iterations: int = 200
    lambda_init: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    tol_rel: float = 1e-9
    lambda_max: float = 1e10
    weight_seed: int = 0

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ConfigError(f"hidden_units must be >= 1, got {self.hidden_units}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.lambda_init <= 0:
            raise ConfigError(f"lambda_init must be > 0, got {self.lambda_init}")
        if self.lambda_up <= 1:
            raise ConfigError(f"lambda_up must be > 1, got {self.lambda_up}")
        if not 0 < self.lambda_down < 1:
            raise ConfigError(f"lambda_down must be in (0,1), got {self.lambda_down}")
        if self.tol_rel <= 0:
            raise ConfigError(f"tol_rel must be > 0, got {self.tol_rel}")


@dataclass(frozen=True)
class TrainedModel:
    params: MlpParams
    train_sse: float
    iterations_used: int
    converged: bool
    config: TrainConfig
    norm_stats: NormStats | None = field(default=None)

    def to_json(self) -> str:
        doc = {
            "d": self.params.d,
            "h": self.params.h,
            "w1": self.params.w1.ravel().tolist(),
            "w2": self.params.w2.tolist(),
            "train_sse": self.train_sse,
            "iterations_used": self.iterations_used,
            "converged": self.converged,
            "config": {
                "hidden_units": self.config.hidden_units,
                "max_iterations": self.config.max_iterations,
                "lambda_init": self.config.lambda_init,
                "lambda_up": self.config.lambda_up,
                "lambda_down": self.config.lambda_down,
                "tol_rel": self.config.tol_rel,
                "lambda_max": self.config.lambda_max,
                "weight_seed": self.config.weight_seed,
            },
            "norm_stats": None
            if self.norm_stats is None
            else {
                "mean": self.norm_stats.mean.tolist(),
                "sd": self.norm_stats.sd.tolist(),
            },
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        doc = json.loads(text)
        d, h = doc["d"], doc["h"]
        params = MlpParams(np.array(doc["w1"]).reshape(h, d + 1), np.array(doc["w2"]))
        stats = doc["norm_stats"]
        return cls(
            params=params,
            train_sse=doc["train_sse"],
            iterations_used=doc["iterations_used"],
            converged=doc["converged"],
            config=TrainConfig(**doc["config"]),
            norm_stats=None
            if stats is None
            else NormStats(np.array(stats["mean"]), np.array(stats["sd"])),
        )


def init_weights(d: int, h: int, seed: int) -> MlpParams:
    """Uniform [-0.5, 0.5] weights, fully determined by the seed."""
    if d < 1 or h < 1:
        raise ValueError(f"d and h must be >= 1, got d={d}, h={h}")
    rng = np.random.default_rng(seed)
    w1 = rng.uniform(-0.5, 0.5, size=(h, d + 1))
    w2 = rng.uniform(-0.5, 0.5, size=h + 1)
    return MlpParams(w1, w2)


def _with_bias(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def predict(p: MlpParams, X: np.ndarray) -> np.ndarray:
    """Network output for every row of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != p.d:
        raise ValueError(f"X must be (n, {p.d}), got {X.shape}")
    A = np.tanh(_with_bias(X) @ p.w1.T)
    return A @ p.w2[:-1] + p.w2[-1]


def forward(p: MlpParams, x: np.ndarray) -> float:
    """Network output for a single input vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.d,):
        raise ValueError(f"x must have length {p.d}, got shape {x.shape}")
    return float(predict(p, x[None, :])[0])


def sse(p: MlpParams, X: np.ndarray, y: np.ndarray) -> float:
    """Sum of squared prediction errors over the rows of (X, y)."""
    y = np.asarray(y, dtype=float)
    r = predict(p, X) - y
    return float(r @ r)


def residual_jacobian(
    p: MlpParams, X: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Residuals r_i = f(x_i) - y_i and the matrix J[i, k] = dr_i / dtheta_k.

    Column order follows the flat parameter layout: w1 row-major, then w2.
    For hidden unit j with activation a_j = tanh(w1_j . xb):

        dr/dw1[j, k] = w2[j] * (1 - a_j^2) * xb[k]
        dr/dw2[j]    = a_j          (j < h)
        dr/dw2[h]    = 1
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != p.d:
        raise ValueError(f"X must be (n, {p.d}), got {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y must have length {X.shape[0]}, got {y.shape}")
    n = X.shape[0]
    Xb = _with_bias(X)
    A = np.tanh(Xb @ p.w1.T)  # (n, h)
    r = A @ p.w2[:-1] + p.w2[-1] - y
    gate = (1.0 - A * A) * p.w2[:-1]  # (n, h)
    J_w1 = gate[:, :, None] * Xb[:, None, :]  # (n, h, d+1)
    J = np.concatenate([J_w1.reshape(n, -1), A, np.ones((n, 1))], axis=1)
    return r, J


def train_lm(X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> TrainedModel:
    """Fit the network by damped Gauss-Newton (Levenberg-Marquardt).

    Each iteration solves (J'J + lambda*I) delta = -J'r with a dense
    Cholesky factorization and proposes theta + delta. The step is accepted
    only when the SSE strictly decreases (lambda shrinks by lambda_down),
    otherwise it is rejected and lambda grows by lambda_up. Training stops
    when an accepted step improves SSE by less than tol_rel relatively, when
    lambda climbs past lambda_max (stuck), or at max_iterations.

    Raises SolveFailure when the damped normal matrix stays numerically
    singular all the way up to lambda_max, which signals pathological data.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"X must be a nonempty matrix, got shape {X.shape}")
    d, h = X.shape[1], cfg.hidden_units

    params = init_weights(d, h, cfg.weight_seed)
    theta = params.flatten()
    r, J = residual_jacobian(params, X, y)
    best_sse = float(r @ r)
    lam = cfg.lambda_init
    eye = np.eye(theta.size)
    iterations = 0
    converged = best_sse == 0.0

    while not converged and iterations < cfg.max_iterations:
        iterations += 1
        try:
            factor = cho_factor(J.T @ J + lam * eye, lower=True)
        except LinAlgError:
            lam *= cfg.lambda_up
            if lam > cfg.lambda_max:
                raise SolveFailure(
                    f"normal equations singular at lambda={lam:.3g}"
                ) from None
            continue
        delta = cho_solve(factor, -(J.T @ r))
        theta_new = theta + delta
        if not np.isfinite(theta_new).all():
            lam *= cfg.lambda_up
            if lam > cfg.lambda_max:
                break
            continue
        candidate = MlpParams.unflatten(theta_new, d, h)
        r_new = predict(candidate, X) - y
        new_sse = float(r_new @ r_new)

        if np.isfinite(new_sse) and new_sse < best_sse:
            improvement = (best_sse - new_sse) / best_sse
            theta, params = theta_new, candidate
            best_sse = new_sse
            r, J = residual_jacobian(params, X, y)
            lam *= cfg.lambda_down
            if improvement < cfg.tol_rel or best_sse == 0.0:
                converged = True
        else:
            lam *= cfg.lambda_up
            if lam > cfg.lambda_max:
                break

    return TrainedModel(
        params=params,
        train_sse=best_sse,
        iterations_used=iterations,
        converged=converged,
        config=cfg,
    )


def attach_stats(model: TrainedModel, stats: NormStats) -> TrainedModel:
    """Record the normalization stats the model was trained under."""
    return replace(model, norm_stats=stats)
