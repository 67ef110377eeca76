"""VAR(p) approximating model: least-squares fit, lag selection, MA recursion."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import EstimationError, InputError, NumericalError, RankDeficientError
from .ingest import Panel

logger = logging.getLogger(__name__)

DEFAULT_MAX_LAG = 12


@dataclass(frozen=True)
class VarSpec:
    lag_order: int = 1
    include_intercept: bool = True
    max_lag_bound: int = DEFAULT_MAX_LAG

    def __post_init__(self):
        if not isinstance(self.lag_order, (int, np.integer)) or self.lag_order < 1:
            raise InputError(f"lag order must be a positive integer, got {self.lag_order!r}")
        if self.lag_order > self.max_lag_bound:
            raise InputError(f"lag order {self.lag_order} exceeds bound {self.max_lag_bound}")

    def n_regressors(self, n_vars: int) -> int:
        return n_vars * self.lag_order + int(self.include_intercept)


@dataclass
class VarModel:
    """Estimated VAR.

    ``coefs[k]`` is the coefficient matrix on lag ``k + 1`` (row = equation).
    ``fallback`` names any non-default estimation path taken (e.g. ridge).
    """

    spec: VarSpec
    labels: list[str]
    coefs: np.ndarray
    intercept: np.ndarray
    sigma: np.ndarray
    sample_size: int
    fallback: str | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coefs = np.asarray(self.coefs, dtype=float)
        self.intercept = np.asarray(self.intercept, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        n = len(self.labels)
        p = self.spec.lag_order
        if self.coefs.shape != (p, n, n):
            raise InputError(f"coefficient array has shape {self.coefs.shape}, expected {(p, n, n)}")
        if self.intercept.shape != (n,) or self.sigma.shape != (n, n):
            raise InputError("intercept/covariance dimensions do not match labels")
        if not (np.all(np.isfinite(self.coefs)) and np.all(np.isfinite(self.sigma))
                and np.all(np.isfinite(self.intercept))):
            raise NumericalError("VAR has NaN or Inf parameters")

    @property
    def n_vars(self) -> int:
        return len(self.labels)

    @property
    def lag_order(self) -> int:
        return self.spec.lag_order

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "p": self.spec.lag_order,
            "include_intercept": self.spec.include_intercept,
            "coefficients": [c.ravel().tolist() for c in self.coefs],
            "intercept": self.intercept.tolist(),
            "sigma": self.sigma.ravel().tolist(),
            "sample_size": self.sample_size,
            "fallback": self.fallback,
            "info": dict(self.info),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "VarModel":
        labels = list(data["labels"])
        n = len(labels)
        p = int(data["p"])
        spec = VarSpec(p, bool(data.get("include_intercept", True)), max(p, DEFAULT_MAX_LAG))
        coefs = np.array(data["coefficients"], dtype=float).reshape(p, n, n)
        sigma = np.array(data["sigma"], dtype=float).reshape(n, n)
        return cls(spec, labels, coefs, np.array(data["intercept"], dtype=float),
                   sigma, int(data["sample_size"]), data.get("fallback"),
                   info=dict(data.get("info", {})))

    @classmethod
    def from_json(cls, text_or_path) -> "VarModel":
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            with open(text_or_path, encoding="utf-8") as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


class MaCoefficients(NamedTuple):
    horizon: int
    matrices: np.ndarray  # (H, N, N); matrices[0] is the identity


class Stability(NamedTuple):
    stable: bool
    spectral_radius: float


def lagged_design(values: np.ndarray, p: int, intercept: bool = True, start: int | None = None):
    """Return ``(Y, X)`` for a VAR(p) regression.

    Rows of ``X`` are ``[1, y_{t-1}, ..., y_{t-p}]`` (leading one only when
    ``intercept``). ``start`` is the first target row; it defaults to ``p`` and
    is raised above ``p`` to align samples across lag orders.
    """
    values = np.asarray(values, dtype=float)
    T = values.shape[0]
    start = p if start is None else start
    if start < p:
        raise ValueError("start must be at least p")
    Y = values[start:]
    blocks = [values[start - k:T - k] for k in range(1, p + 1)]
    if intercept:
        blocks.insert(0, np.ones((T - start, 1)))
    return Y, np.hstack(blocks)


def split_coefficients(B: np.ndarray, n: int, p: int, intercept: bool):
    """Turn a stacked (k, N) regression coefficient block into (coefs, c)."""
    off = int(intercept)
    c = B[0].copy() if intercept else np.zeros(n)
    coefs = np.stack([B[off + k * n: off + (k + 1) * n].T for k in range(p)])
    return coefs, c


def residual_covariance(resid: np.ndarray) -> np.ndarray:
    """Residual cross-product over the effective sample size, symmetrized."""
    s = resid.T @ resid / resid.shape[0]
    return 0.5 * (s + s.T)


def _check_sample(n_eff, n_vars, spec):
    need = spec.n_regressors(n_vars) + 1
    if n_eff < need:
        raise InputError(
            f"insufficient sample: {n_eff} usable observations, need at least {need} "
            f"for N={n_vars}, p={spec.lag_order}")


def _solve_ols(Y, X, ridge: float | None):
    k = X.shape[1]
    if ridge is None:
        rank = np.linalg.matrix_rank(X)
        if rank < k:
            raise RankDeficientError(
                f"regressor matrix has rank {rank} < {k} columns (collinear series)")
        B, *_ = np.linalg.lstsq(X, Y, rcond=None)
        return B
    G = X.T @ X
    # ridge scaled to the average regressor second moment; intercept column unpenalized
    penal = np.ones(k)
    if np.allclose(X[:, 0], 1.0):
        penal[0] = 0.0
    scale = np.trace(G) / k
    G = G + ridge * scale * np.diag(penal)
    try:
        return np.linalg.solve(G, X.T @ Y)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError(f"ridge-regularized Gram matrix is singular: {exc}") from exc


def estimate_ols(panel: Panel, spec: VarSpec, ridge: float | None = None) -> VarModel:
    """Equation-by-equation least squares.

    ``ridge`` (e.g. ``1e-4``) adds ``ridge * trace(X'X)/k`` to the diagonal
    of the Gram matrix for the lag columns; used as a fallback for
    near-singular windows and recorded on ``VarModel.fallback``.
    """
    values = panel.values
    n = panel.n_vars
    p = spec.lag_order
    n_eff = values.shape[0] - p
    if ridge is None:
        _check_sample(n_eff, n, spec)
    elif n_eff < 2:
        raise InputError(f"insufficient sample: {n_eff} usable observations")
    Y, X = lagged_design(values, p, spec.include_intercept)
    B = _solve_ols(Y, X, ridge)
    resid = Y - X @ B
    coefs, c = split_coefficients(B, n, p, spec.include_intercept)
    model = VarModel(spec, list(panel.labels), coefs, c, residual_covariance(resid), n_eff,
                     fallback=None if ridge is None else f"ridge({ridge:g})")
    _warn_if_unstable(model)
    return model


def _warn_if_unstable(model):
    st = stability_check(model)
    if not st.stable:
        logger.warning("estimated VAR is not stable (spectral radius %.4f)", st.spectral_radius)


def select_lag(panel: Panel, max_p: int, criterion: str = "bic",
               include_intercept: bool = True) -> int:
    """Pick p in 1..max_p minimizing AIC or BIC on a common sample.

    All candidate models are fitted to targets starting at row ``max_p`` so
    the criteria are comparable. Ties go to the smaller p.
    """
    if max_p < 1:
        raise InputError("max_p must be at least 1")
    if criterion not in ("aic", "bic"):
        raise InputError(f"unknown criterion {criterion!r}")
    n = panel.n_vars
    T = panel.n_obs
    n_eff = T - max_p
    _check_sample(n_eff, n, VarSpec(max_p, include_intercept, max(max_p, DEFAULT_MAX_LAG)))
    scores = []
    for p in range(1, max_p + 1):
        Y, X = lagged_design(panel.values, p, include_intercept, start=max_p)
        B = _solve_ols(Y, X, None)
        sigma = residual_covariance(Y - X @ B)
        sign, logdet = np.linalg.slogdet(sigma)
        if sign <= 0:
            raise NumericalError(f"singular residual covariance at p={p}")
        n_params = p * n * n
        if criterion == "aic":
            penalty = 2.0 * n_params / n_eff
        else:
            penalty = np.log(n_eff) * n_params / n_eff
        scores.append(logdet + penalty)
    return int(np.argmin(scores)) + 1


def ma_coefficients(model: VarModel, horizon: int) -> MaCoefficients:
    """Moving-average matrices A_0..A_{H-1} via A_h = sum_k Phi_k A_{h-k}."""
    if horizon < 1:
        raise InputError("horizon must be at least 1")
    n = model.n_vars
    p = model.lag_order
    A = np.zeros((horizon, n, n))
    A[0] = np.eye(n)
    for h in range(1, horizon):
        acc = np.zeros((n, n))
        for k in range(1, min(h, p) + 1):
            acc += model.coefs[k - 1] @ A[h - k]
        A[h] = acc
    return MaCoefficients(horizon, A)


def companion_matrix(coefs: np.ndarray) -> np.ndarray:
    p, n, _ = coefs.shape
    F = np.zeros((n * p, n * p))
    F[:n, :] = np.hstack(list(coefs))
    if p > 1:
        F[n:, :-n] = np.eye(n * (p - 1))
    return F


def stability_check(model: VarModel) -> Stability:
    radius = float(np.max(np.abs(np.linalg.eigvals(companion_matrix(model.coefs)))))
    return Stability(radius < 1.0, radius)


def simulate_var(coefs, sigma, T, rng, intercept=None, burn=200):
    """Simulate a Gaussian VAR; used by tests and examples."""
    coefs = np.asarray(coefs, dtype=float)
    p, n, _ = coefs.shape
    c = np.zeros(n) if intercept is None else np.asarray(intercept, dtype=float)
    L = np.linalg.cholesky(np.asarray(sigma, dtype=float))
    eps = rng.standard_normal((T + burn, n)) @ L.T
    y = np.zeros((T + burn, n))
    for t in range(T + burn):
        acc = c + eps[t]
        for k in range(1, p + 1):
            if t - k >= 0:
                acc = acc + coefs[k - 1] @ y[t - k]
        y[t] = acc
    return y[burn:]
