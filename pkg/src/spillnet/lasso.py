"""LASSO-penalized VAR estimation by cyclic coordinate descent.

Each VAR equation is an independent problem

    minimize  1/(2n) ||y - b0 - X beta||^2 + lam * ||beta||_1

with an unpenalized intercept ``b0``. All equations share one standardized
Gram matrix; each is then solved on its own by covariance-update coordinate
descent, so results do not depend on how equations are batched or scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from numba import njit

from .errors import ConvergenceError, InputError
from .ingest import Panel
from .var_model import VarModel, VarSpec, lagged_design, residual_covariance, split_coefficients


@dataclass
class LassoConfig:
    """Penalty settings. ``penalty`` is a float or ``"auto"`` (path + selection)."""

    penalty: float | str = "auto"
    lambda_grid_size: int = 50
    selection: str = "bic"
    cv_folds: int = 5
    max_iter: int = 10000
    tol: float = 1e-7
    standardize: bool = True
    min_ratio: float = 1e-3

    def problems(self) -> list[str]:
        out = []
        if isinstance(self.penalty, str):
            if self.penalty != "auto":
                out.append(f"lasso.lambda: expected a number or 'auto', got {self.penalty!r}")
        elif not np.isfinite(self.penalty) or self.penalty < 0:
            out.append(f"lasso.lambda: must be >= 0, got {self.penalty}")
        if self.lambda_grid_size < 2:
            out.append("lasso.lambda_grid_size: must be at least 2")
        if self.selection not in ("bic", "cv"):
            out.append(f"lasso.selection: expected bic or cv, got {self.selection!r}")
        if self.cv_folds < 2:
            out.append("lasso.cv_folds: must be at least 2")
        if self.max_iter < 1:
            out.append("lasso.max_iter: must be at least 1")
        if not self.tol > 0:
            out.append("lasso.tol: must be positive")
        if not 0 < self.min_ratio < 1:
            out.append("lasso.min_ratio: must lie in (0, 1)")
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise InputError("; ".join(problems))

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("penalty")
        return d

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "lambda" in data:
            data["penalty"] = data.pop("lambda")
        return cls(**data)


@dataclass
class Standardized:
    """Centered/scaled design: Z = (X - x_mean) / x_scale."""

    Z: np.ndarray
    Y: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: np.ndarray
    gram: np.ndarray = field(repr=False)
    corr: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.Z.shape[0]

    def to_original(self, beta):
        """Map standardized coefficients (k, N) back to (coefs, intercepts)."""
        b = beta / self.x_scale[:, None]
        return b, self.y_mean - self.x_mean @ b


def standardize_design(X, Y, intercept=True, standardize=True) -> Standardized:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, k = X.shape
    if intercept:
        x_mean, y_mean = X.mean(axis=0), Y.mean(axis=0)
    else:
        x_mean, y_mean = np.zeros(k), np.zeros(Y.shape[1])
    Xc = X - x_mean
    spread = np.sqrt(np.mean(Xc ** 2, axis=0))
    bad = np.flatnonzero(spread <= 1e-12 * max(1.0, float(np.max(np.abs(X)))))
    if bad.size:
        raise InputError(f"zero-variance regressor column(s) {bad.tolist()}")
    scale = spread if standardize else np.ones(k)
    Z = Xc / scale
    Yc = Y - y_mean
    G = Z.T @ Z / n
    G = np.ascontiguousarray(0.5 * (G + G.T))
    return Standardized(Z, Yc, x_mean, scale, y_mean, G, Z.T @ Yc / n)


def soft_threshold(z, lam):
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def objective(std: Standardized, beta, lam):
    """Per-equation penalized objective on the standardized problem."""
    r = std.Y - std.Z @ beta
    return 0.5 * np.mean(r ** 2, axis=0) + lam * np.abs(beta).sum(axis=0)


@njit(cache=True)
def _cd_column(G, c, beta, lam, max_iter, tol, half_yy, trace):
    """Coordinate descent for one equation; updates ``beta`` in place.

    Returns (sweeps, last max change, converged). When ``trace`` has room,
    the objective after each sweep is stored in it.
    """
    k = c.shape[0]
    q = c - G @ beta
    active = np.zeros(k, dtype=np.bool_)
    full = True
    it = 0
    change = 0.0
    while it < max_iter:
        change = 0.0
        for j in range(k):
            if not full and not active[j]:
                continue
            old = beta[j]
            gjj = G[j, j]
            z = q[j] + gjj * old
            if z > lam:
                new = (z - lam) / gjj
            elif z < -lam:
                new = (z + lam) / gjj
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                beta[j] = new
                for m in range(k):
                    q[m] -= G[j, m] * delta
                if abs(delta) > change:
                    change = abs(delta)
        it += 1
        if trace.shape[0] >= it:
            cb = 0.0
            qb = 0.0
            l1 = 0.0
            for m in range(k):
                cb += c[m] * beta[m]
                qb += q[m] * beta[m]
                l1 += abs(beta[m])
            trace[it - 1] = half_yy - 0.5 * cb - 0.5 * qb + lam * l1
        if change < tol:
            if full:
                return it, change, True
            full = True
        elif full:
            for m in range(k):
                active[m] = beta[m] != 0.0
            full = False
    return it, change, False


def coordinate_descent(std: Standardized, lam, beta0=None, max_iter=10000, tol=1e-7,
                       trace=None, strict=True):
    """Solve every equation of ``std`` at penalty ``lam`` (scalar or one per equation).

    Each equation alternates full sweeps with sweeps over its current nonzero
    set, and stops after a full sweep whose largest coefficient change is
    below ``tol``. Equations are solved independently of one another.

    Returns
    -------
    beta : (k, N) array
    n_iter : (N,) sweeps used
    last_change : (N,) max coefficient change in the final sweep

    Raises ConvergenceError naming every equation that used up ``max_iter``;
    with ``strict=False`` the partial result is returned instead and callers
    compare ``n_iter`` with ``max_iter``. If ``trace`` is a list, it receives one array per equation holding the
    objective after each sweep.
    """
    G, c = std.gram, std.corr
    k, N = c.shape
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (N,))
    beta = np.zeros((k, N)) if beta0 is None else np.array(beta0, dtype=float)
    half_yy = 0.5 * np.mean(std.Y ** 2, axis=0)
    n_iter = np.zeros(N, dtype=int)
    last_change = np.zeros(N)
    failed = []
    for e in range(N):
        col = np.ascontiguousarray(beta[:, e])
        buf = np.empty(max_iter if trace is not None else 0)
        it, ch, ok = _cd_column(G, np.ascontiguousarray(c[:, e]), col, float(lam[e]),
                                int(max_iter), float(tol), float(half_yy[e]), buf)
        beta[:, e] = col
        n_iter[e], last_change[e] = it, ch
        if trace is not None:
            trace.append(buf[:it].copy())
        if not ok:
            failed.append((e, float(ch)))
    if failed and strict:
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_iter} sweeps for equation(s) "
            + ", ".join(f"{e} (last change {ch:.3g})" for e, ch in failed), failed)
    return beta, n_iter, last_change


def lambda_max(std: Standardized) -> np.ndarray:
    """Per-equation smallest penalty with an all-zero solution."""
    return np.max(np.abs(std.corr), axis=0)


def lambda_grid(lmax: float, size: int, min_ratio: float = 1e-3) -> np.ndarray:
    return lmax * np.logspace(0.0, np.log10(min_ratio), size)


def _bic(std, beta, intercept):
    r = std.Y - std.Z @ beta
    n = std.n
    rss = np.sum(r ** 2, axis=0)
    df = np.count_nonzero(beta, axis=0) + int(intercept)
    return n * np.log(np.maximum(rss, 1e-300) / n) + df * np.log(n)


def _fit_path(std, grid, config):
    """Warm-started path. Returns (betas (G, k, N), ok (G, N)).

    Once an equation fails to converge at some grid point, it and every
    smaller penalty are marked unusable for that equation.
    """
    k, N = std.corr.shape
    betas = np.zeros((len(grid), k, N))
    ok = np.zeros((len(grid), N), dtype=bool)
    beta = np.zeros((k, N))
    alive = np.ones(N, dtype=bool)
    for g, lam in enumerate(grid):
        beta, n_iter, _ = coordinate_descent(std, lam, beta, config.max_iter, config.tol,
                                             strict=False)
        alive &= n_iter < config.max_iter
        betas[g] = beta
        ok[g] = alive
        if not alive.any():
            break
    return betas, ok


def _cv_scores(X, Y, grid, config, intercept):
    """Per-equation mean held-out MSE on contiguous time blocks, shape (G, N)."""
    n = X.shape[0]
    edges = np.linspace(0, n, config.cv_folds + 1).astype(int)
    total = np.zeros((len(grid), Y.shape[1]))
    for a, b in zip(edges[:-1], edges[1:]):
        train = np.r_[0:a, b:n]
        std = standardize_design(X[train], Y[train], intercept, config.standardize)
        betas, ok = _fit_path(std, grid, config)
        for g in range(len(grid)):
            coef, icpt = std.to_original(betas[g])
            err = Y[a:b] - (X[a:b] @ coef + icpt)
            total[g] += np.where(ok[g], np.sum(err ** 2, axis=0), np.inf)
    return total / n


def _design(panel: Panel, spec: VarSpec):
    n_eff = panel.n_obs - spec.lag_order
    if n_eff < 10:
        raise InputError(f"insufficient sample for LASSO: {n_eff} usable observations, need 10")
    return lagged_design(panel.values, spec.lag_order, intercept=False)


def lambda_path(panel: Panel, spec: VarSpec, config: LassoConfig | None = None):
    """Warm-started solution path on a shared log-spaced penalty grid.

    The grid runs from the system-wide ``lambda_max`` (largest over equations)
    down to ``lambda_max * min_ratio``.

    Returns a list of ``(lambda, objective, nonzero_count, criterion)`` tuples,
    where objective and criterion (BIC or CV error) are summed over equations
    and nonzero_count includes intercepts. The criterion is ``inf`` at grid
    points where some equation did not converge or the fit is saturated.
    """
    config = config or LassoConfig()
    config.validate()
    path, _, _ = _path_details(panel, spec, config)
    return path


def _path_details(panel, spec, config):
    Y, X = _design(panel, spec)
    intercept = spec.include_intercept
    std = standardize_design(X, Y, intercept, config.standardize)
    grid = lambda_grid(float(lambda_max(std).max()), config.lambda_grid_size, config.min_ratio)
    betas, ok = _fit_path(std, grid, config)
    if config.selection == "bic":
        crit = np.stack([_bic(std, b, intercept) for b in betas])
        # saturated fits (df >= n) make BIC degenerate
        df = np.count_nonzero(betas, axis=1) + int(intercept)
        crit = np.where(df < std.n, crit, np.inf)
    else:
        crit = _cv_scores(X, Y, grid, config, intercept)
    crit = np.where(ok, crit, np.inf)
    path = []
    for g, lam in enumerate(grid):
        obj = float(objective(std, betas[g], lam).sum())
        nnz = int(np.count_nonzero(betas[g])) + (panel.n_vars if intercept else 0)
        path.append((float(lam), obj, nnz, float(crit[g].sum())))
    return path, (std, grid, betas, crit), (X, Y)


def estimate_lasso(panel: Panel, spec: VarSpec, config: LassoConfig | None = None) -> VarModel:
    """LASSO VAR. With ``penalty="auto"`` each equation picks its own grid point."""
    config = config or LassoConfig()
    config.validate()
    n = panel.n_vars
    p = spec.lag_order
    if config.penalty == "auto":
        _, (std, grid, betas, crit), _ = _path_details(panel, spec, config)
        dead = ~np.isfinite(crit).any(axis=0)
        if dead.any():
            raise ConvergenceError(
                f"no usable penalty on the path for equation(s) {np.flatnonzero(dead).tolist()}",
                [(int(e), float("nan")) for e in np.flatnonzero(dead)])
        pick = np.argmin(crit, axis=0)
        beta = betas[pick, :, np.arange(n)].T
        lams = grid[pick]
    else:
        Y, X = _design(panel, spec)
        std = standardize_design(X, Y, spec.include_intercept, config.standardize)
        lams = np.full(n, float(config.penalty))
        beta, _, _ = coordinate_descent(std, lams, None, config.max_iter, config.tol)
    coef, icpt = std.to_original(beta)
    Y, X = _design(panel, spec)
    resid = Y - (X @ coef + icpt)
    stacked = np.vstack([icpt[None, :], coef])
    coefs, c = split_coefficients(stacked, n, p, True)
    if not spec.include_intercept:
        c = np.zeros(n)
    sigma = project_psd(residual_covariance(resid))
    info = {"lambda": lams.tolist(), "selection": config.selection if config.penalty == "auto" else None,
            "nonzero": int(np.count_nonzero(beta))}
    return VarModel(spec, list(panel.labels), coefs, c, sigma, X.shape[0], info=info)


def project_psd(S: np.ndarray) -> np.ndarray:
    """Nearest symmetric PSD matrix (Frobenius) by clipping eigenvalues at zero."""
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    if w.min() >= 0:
        return S
    out = (V * np.maximum(w, 0.0)) @ V.T
    return 0.5 * (out + out.T)
