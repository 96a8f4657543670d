"""Least-squares estimation of linear strategy coefficients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import qr, solve_triangular

from ..agents.linear import regressors


class RankError(ValueError):
    """The design matrix is rank deficient. ``columns`` names the dependent ones."""

    def __init__(self, columns: Sequence[str]):
        super().__init__(f"design matrix is rank deficient; collinear columns: {', '.join(columns)}")
        self.columns = tuple(columns)


@dataclass(frozen=True)
class OlsFit:
    names: tuple[str, ...]
    coefficients: np.ndarray
    residuals: np.ndarray
    residual_variance: float
    r_squared: Optional[float]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, (float(b) for b in self.coefficients)))


def estimate_coefficients(X, q, names: Optional[Sequence[str]] = None,
                          rtol: float = 1e-10) -> OlsFit:
    """OLS via column-pivoted QR.

    Residual variance uses n - k degrees of freedom. R² is centered and is
    None when ``q`` is constant.
    """
    X = np.asarray(X, dtype=float)
    q = np.asarray(q, dtype=float)
    if X.ndim != 2 or q.shape != (X.shape[0],):
        raise ValueError("X must be n x k and q must have n entries")
    n, k = X.shape
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(k))
    if len(names) != k:
        raise ValueError("one name per column is required")
    if n < k:
        raise ValueError(f"need at least {k} rows, got {n}")
    Q, R, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rtol * diag[0])) if k and diag[0] > 0 else 0
    if rank < k:
        raise RankError([names[j] for j in piv[rank:]])
    beta = np.empty(k)
    beta[piv] = solve_triangular(R, Q.T @ q)
    resid = q - X @ beta
    ssr = float(resid @ resid)
    sst = float(((q - q.mean()) ** 2).sum())
    return OlsFit(
        names=names,
        coefficients=beta,
        residuals=resid,
        residual_variance=ssr / (n - k) if n > k else 0.0,
        r_squared=None if sst == 0 else 1.0 - ssr / sst,
    )


def state_matrix(agent_type: str, observations, params=None,
                 intercept: bool = False) -> tuple[list[str], np.ndarray]:
    """Regressor matrix for ``agent_type`` from (snapshot, account, news) triples."""
    rows, names = [], None
    for snapshot, account, news in observations:
        x = regressors(agent_type, snapshot, account, news, params)
        names = names or list(x)
        rows.append([x[name] for name in names])
    names = names or []
    X = np.array(rows, dtype=float).reshape(len(rows), len(names))
    if intercept:
        names = ["intercept", *names]
        X = np.column_stack([np.ones(len(rows)), X])
    return names, X
