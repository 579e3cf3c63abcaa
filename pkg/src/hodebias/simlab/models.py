"""Data-generating models and oracle variances for the simulation studies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionTooSmall, EstimationError


def ar1_cov(d: int, rho: float) -> np.ndarray:
    """``Sigma_jk = rho^|j-k|``."""
    idx = np.arange(d)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def sigma_from_spec(spec, d: int) -> np.ndarray:
    """``"identity"``, ``{"ar1": rho}`` or ``("ar1", rho)`` to a covariance matrix."""
    if spec in (None, "identity", "Identity"):
        return np.eye(d)
    if isinstance(spec, dict) and set(spec) == {"ar1"}:
        return ar1_cov(d, float(spec["ar1"]))
    if isinstance(spec, (tuple, list)) and len(spec) == 2 and str(spec[0]).lower() == "ar1":
        return ar1_cov(d, float(spec[1]))
    raise EstimationError(f"unknown sigma_spec {spec!r}")


def dimension_for(n_total: int, gamma: float) -> int:
    """``floor(n^gamma)``, guarded against round-off just below an integer."""
    return int(math.floor(n_total**gamma + 1e-9))


def gen_gaussian(n: int, d: int, sigma_spec, gen: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. ``N(0, Sigma)`` rows."""
    if n < 1 or d < 1:
        raise EstimationError("n and d must be positive")
    L = np.linalg.cholesky(sigma_from_spec(sigma_spec, d))
    return gen.standard_normal((n, d)) @ L.T


def gen_regression(n: int, d: int, rho: float, gen: np.random.Generator):
    """Nonlinear heteroskedastic regression sample ``(X, Y)``.

    ``X ~ N(0, Sigma)`` with ``Sigma_jk = rho^|j-k|`` and
    ``Y = sin(X_1) + (X_2^2 - 0.6) / 2 + (1 + 0.3 X_1^2) eps``.
    """
    if d < 2:
        raise DimensionTooSmall("the response depends on X_2, so d >= 2 is required")
    if n < 1:
        raise EstimationError("n must be positive")
    L = np.linalg.cholesky(ar1_cov(d, rho))
    X = gen.standard_normal((n, d)) @ L.T
    eps = gen.standard_normal(n)
    x1, x2 = X[:, 0], X[:, 1]
    Y = np.sin(x1) + 0.5 * (x2**2 - 0.6) + (1.0 + 0.3 * x1**2) * eps
    return X, Y


def true_beta(d: int) -> np.ndarray:
    """Population projection coefficient: ``exp(-1/2) e_1`` for every ``rho``."""
    beta = np.zeros(d)
    beta[0] = math.exp(-0.5)
    return beta


def true_beta_eta(eta=None) -> float:
    """``eta^T beta``; ``eta = e_1`` by default."""
    if eta is None:
        return math.exp(-0.5)
    eta = np.asarray(eta, dtype=float)
    return float(eta @ true_beta(eta.size))


@dataclass(frozen=True)
class GramModel:
    """Gaussian rows with covariance ``sigma``; target ``eta1^T sigma^{-1} eta2``."""

    sigma: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray

    def target(self) -> float:
        return float(self.eta1 @ np.linalg.solve(self.sigma, self.eta2))

    def analytic_variance(self) -> float:
        """``Var((u'X)(v'X)) = (u'Su)(v'Sv) + (u'Sv)^2`` for Gaussian ``X``."""
        u = np.linalg.solve(self.sigma, self.eta1)
        v = np.linalg.solve(self.sigma, self.eta2)
        S = self.sigma
        return float((u @ S @ u) * (v @ S @ v) + (u @ S @ v) ** 2)


@dataclass(frozen=True)
class RegressionModel:
    d: int
    rho: float = 0.6
    eta: np.ndarray | None = None


@dataclass(frozen=True)
class OracleSigma:
    sigma: float
    variance: float
    se: float  # standard error of ``variance``
    draws: int


def oracle_sigma(model, mc_draws: int = 1_000_000, gen: np.random.Generator | None = None,
                 chunk: int = 100_000) -> OracleSigma:
    """Monte Carlo variance of the first-order influence term under the true model."""
    if mc_draws < 2:
        raise EstimationError("mc_draws must be at least 2")
    gen = gen if gen is not None else np.random.default_rng(0)
    if isinstance(model, GramModel):
        for name in ("eta1", "eta2"):
            v = np.asarray(getattr(model, name), dtype=float)
            if not np.any(v != 0):
                raise EstimationError(f"{name} must be nonzero")
        u = np.linalg.solve(model.sigma, model.eta1)
        v = np.linalg.solve(model.sigma, model.eta2)
        L = np.linalg.cholesky(model.sigma)
        d = model.sigma.shape[0]

        def draw(m):
            X = gen.standard_normal((m, d)) @ L.T
            return (X @ u) * (X @ v)

    elif isinstance(model, RegressionModel):
        eta = np.eye(model.d)[0] if model.eta is None else np.asarray(model.eta, dtype=float)
        if not np.any(eta != 0):
            raise EstimationError("eta must be nonzero")
        u = np.linalg.solve(ar1_cov(model.d, model.rho), eta)
        beta = true_beta(model.d)

        def draw(m):
            X, Y = gen_regression(m, model.d, model.rho, gen)
            return (X @ u) * (Y - X @ beta)

    else:
        raise EstimationError(f"unsupported model {type(model).__name__}")

    vals = []
    left = mc_draws
    while left > 0:
        m = min(chunk, left)
        vals.append(draw(m))
        left -= m
    z = np.concatenate(vals)
    dev = z - z.mean()
    sq = dev**2
    var = float(sq.sum() / (z.size - 1))
    se = float(sq.std(ddof=1) / math.sqrt(z.size))
    return OracleSigma(math.sqrt(var), var, se, z.size)
