"""H-step forecast-error variance decompositions.

Horizon convention: sums run over h = 0..H-1, so ``H=1`` is the one-step-ahead
decomposition, determined entirely by the innovation covariance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .var_model import VarModel, ma_coefficients

NEG_SLACK = 1e-12


@dataclass
class FevdMatrix:
    """Raw decomposition theta[i, j]: share of i's forecast-error variance from shock j.

    ``identification`` is ``"cholesky"`` or ``"generalized"``; ``ordering`` is
    the Cholesky ordering (labels), ``None`` for generalized.
    """

    horizon: int
    identification: str
    theta: np.ndarray
    labels: list[str]
    ordering: list[str] | None = None


@dataclass
class ConnectednessTable:
    """Row-stochastic decomposition matrix; doubles as a weighted adjacency matrix."""

    horizon: int
    identification: str
    d: np.ndarray
    labels: list[str]

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=float)
        n = len(self.labels)
        if self.d.shape != (n, n):
            raise InputError(f"table shape {self.d.shape} does not match {n} labels")
        if np.any(self.d < 0) or np.any(self.d > 1 + 1e-12):
            raise NumericalError("connectedness entries must lie in [0, 1]")
        dev = np.max(np.abs(self.d.sum(axis=1) - 1.0))
        if dev > 1e-10:
            raise NumericalError(f"table rows do not sum to 1 (max deviation {dev:.3g})")

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"unknown label {label!r}") from None

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "identification": self.identification,
                "labels": list(self.labels), "d": self.d.tolist()}

    @classmethod
    def from_dict(cls, data) -> "ConnectednessTable":
        return cls(int(data["horizon"]), data["identification"], np.array(data["d"], dtype=float),
                   list(data["labels"]))

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, path) -> "ConnectednessTable":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if "table" in data:
            data = data["table"]
        return cls.from_dict(data)


def _symmetrized(sigma):
    return 0.5 * (sigma + sigma.T)


def _clip_negative(theta):
    worst = theta.min()
    if worst < -NEG_SLACK:
        raise NumericalError(f"negative variance share {worst:.3g}")
    return np.maximum(theta, 0.0)


def _forecast_variance(A, sigma):
    # diag of sum_h A_h Sigma A_h'
    return np.einsum("hij,jk,hik->i", A, sigma, A)


def _resolve_ordering(model, ordering):
    labels = list(model.labels)
    if ordering is None:
        return list(range(len(labels)))
    perm = []
    for item in ordering:
        if isinstance(item, str):
            if item not in labels:
                raise InputError(f"ordering names unknown label {item!r}")
            perm.append(labels.index(item))
        else:
            perm.append(int(item))
    if sorted(perm) != list(range(len(labels))):
        raise InputError("ordering must be a permutation of all variables")
    return perm


def fevd_cholesky(model: VarModel, horizon: int, ordering=None) -> FevdMatrix:
    """Orthogonalized decomposition using the Cholesky factor of Sigma.

    ``ordering`` lists labels (or column indices) from most to least
    exogenous; ``None`` keeps the model's order. The result is reported in
    the model's original label order.
    """
    perm = _resolve_ordering(model, ordering)
    A = ma_coefficients(model, horizon).matrices
    sigma = _symmetrized(model.sigma)
    A_p = A[:, perm][:, :, perm]
    S_p = sigma[np.ix_(perm, perm)]
    w = np.linalg.eigvalsh(S_p)
    if w[0] <= 1e-12 * max(w[-1], 0.0):
        raise NumericalError("residual covariance is not positive definite; "
                             "Cholesky identification needs strict PD (try generalized)")
    P = np.linalg.cholesky(S_p)
    num = np.sum((A_p @ P) ** 2, axis=0)
    den = _forecast_variance(A_p, S_p)
    theta_p = _clip_negative(num / den[:, None])
    inv = np.argsort(perm)
    theta = theta_p[np.ix_(inv, inv)]
    return FevdMatrix(horizon, "cholesky", theta, list(model.labels),
                      [model.labels[k] for k in perm])


def fevd_generalized(model: VarModel, horizon: int) -> FevdMatrix:
    """Generalized (ordering-free) decomposition from covariance-scaled responses.

    Rows do not sum to one; see :func:`normalize`.
    """
    A = ma_coefficients(model, horizon).matrices
    sigma = _symmetrized(model.sigma)
    s_jj = np.diag(sigma)
    if np.any(s_jj <= 0):
        raise NumericalError("generalized decomposition needs positive shock variances")
    num = np.sum((A @ sigma) ** 2, axis=0) / s_jj[None, :]
    den = _forecast_variance(A, sigma)
    if np.any(den <= 0):
        raise NumericalError("zero forecast-error variance")
    theta = _clip_negative(num / den[:, None])
    return FevdMatrix(horizon, "generalized", theta, list(model.labels))


def fevd(model: VarModel, horizon: int, identification: str = "generalized",
         ordering=None) -> FevdMatrix:
    if identification == "generalized":
        return fevd_generalized(model, horizon)
    if identification == "cholesky":
        return fevd_cholesky(model, horizon, ordering)
    raise InputError(f"unknown identification {identification!r}")


def normalize(fevd: FevdMatrix) -> ConnectednessTable:
    """Divide each row by its sum so entries are variance fractions."""
    rows = fevd.theta.sum(axis=1)
    if np.any(rows <= 0):
        raise NumericalError("decomposition row with zero sum")
    d = fevd.theta / rows[:, None]
    tag = fevd.identification
    if fevd.ordering is not None:
        tag = f"cholesky({','.join(fevd.ordering)})"
    return ConnectednessTable(fevd.horizon, tag, d, list(fevd.labels))
