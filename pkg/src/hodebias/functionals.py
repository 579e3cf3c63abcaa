"""Concrete functionals with analytic derivative forms and chain structures.

* precision contrast ``eta1^T S^{-1} eta2``
* regression projection ``eta^T A^{-1} B`` on moment pairs ``(A, B)``
* log-determinant
* Stieltjes transform ``tr(B (A - zI)^{-1})`` for real ``z < 0``
* polynomial test functionals (linear and quadratic) for exactness checks

Derivative forms are evaluated straight from their permutation-sum formulas;
the chain structures used by :mod:`hodebias.product_dp` are built separately
so that the two can be checked against each other.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import linalg

from .elements import DENSE, PAIR, Element, KLinearForm
from .errors import (
    DomainTooTight,
    EstimationError,
    NonPositiveDeterminant,
    OrderExceedsFamily,
    SingularInput,
    SingularShift,
)
from .estimator import DerivativeFamily
from .product_dp import ChainSpec, ProductStructure

SPD_FLOOR = 1e-8
DEFAULT_MAX_ORDER = 8


# ---------------------------------------------------------------------------
# linear algebra helpers
# ---------------------------------------------------------------------------


def spd_violation(M: np.ndarray, rel: float = SPD_FLOOR) -> str | None:
    """``None`` if ``lambda_min(M) > rel * ||M||_op``, else a reason."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        return "non-finite entries"
    S = 0.5 * (M + M.T)
    # cheap sufficient test first: ||S||_op <= ||S||_F
    fro = np.linalg.norm(S)
    if fro == 0.0:
        return "zero matrix"
    try:
        np.linalg.cholesky(S - rel * fro * np.eye(S.shape[0]))
        return None
    except np.linalg.LinAlgError:
        pass
    ev = np.linalg.eigvalsh(S)
    if ev[0] <= rel * max(abs(ev[0]), abs(ev[-1])):
        return f"minimum eigenvalue {ev[0]:.3g} below floor {rel:g} x operator norm"
    return None


def _inverse(M: np.ndarray, exc=SingularInput) -> np.ndarray:
    """Inverse via Cholesky when ``M`` is SPD, LU otherwise."""
    M = np.asarray(M, dtype=float)
    try:
        c = linalg.cho_factor(M, check_finite=False)
        return linalg.cho_solve(c, np.eye(M.shape[0]), check_finite=False)
    except (np.linalg.LinAlgError, linalg.LinAlgError):
        pass
    try:
        inv = np.linalg.inv(M)
    except np.linalg.LinAlgError as err:
        raise exc(str(err)) from None
    if not np.all(np.isfinite(inv)):
        raise exc("matrix is numerically singular")
    return inv


def _vec(v, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1 or not np.any(v != 0):
        raise EstimationError(f"{name} must be a nonzero vector")
    return v


def _check_order(k: int, max_order: int, name: str) -> None:
    if k < 1 or k > max_order:
        raise OrderExceedsFamily(f"{name}: derivative order {k} outside 1..{max_order}")


def _solve(M: np.ndarray, b: np.ndarray, exc=SingularInput) -> np.ndarray:
    """``M^{-1} b`` via Cholesky when possible."""
    try:
        c = linalg.cho_factor(M, check_finite=False)
        return linalg.cho_solve(c, b, check_finite=False)
    except (np.linalg.LinAlgError, linalg.LinAlgError):
        pass
    try:
        out = np.linalg.solve(M, b)
    except np.linalg.LinAlgError as err:
        raise exc(str(err)) from None
    if not np.all(np.isfinite(out)):
        raise exc("matrix is numerically singular")
    return out


def _perm_sum(k: int, hs, start, step, final) -> float:
    """``sum_sigma final(step(...step(start, h_s1)...), h_sk)`` over orderings.

    Identical arguments need a single chain; ``k >= 4`` sums over orderings
    with a subset recursion (``k 2^(k-1)`` steps instead of ``k k!``).
    """
    if k == 1:
        return final(start, hs[0])
    if all(h is hs[0] for h in hs):
        r = start
        for _ in range(k - 1):
            r = step(r, hs[0])
        return math.factorial(k) * final(r, hs[0])
    if k <= 3:
        total = 0.0
        for p in itertools.permutations(range(k)):
            r = start
            for i in p[:-1]:
                r = step(r, hs[i])
            total += final(r, hs[p[-1]])
        return total
    level = {0: start}
    for _ in range(k - 1):
        nxt = {}
        for mask, r in level.items():
            for i in range(k):
                if not mask >> i & 1:
                    m2 = mask | (1 << i)
                    v = step(r, hs[i])
                    nxt[m2] = v if m2 not in nxt else nxt[m2] + v
        level = nxt
    full = (1 << k) - 1
    return sum(final(r, hs[(full ^ mask).bit_length() - 1]) for mask, r in level.items())


# ---------------------------------------------------------------------------
# precision contrast
# ---------------------------------------------------------------------------


def build_precision(eta1, eta2, max_order: int = DEFAULT_MAX_ORDER):
    """Family and chain structure for ``omega(S) = eta1^T S^{-1} eta2``."""
    eta1 = _vec(eta1, "eta1")
    eta2 = _vec(eta2, "eta2")
    if eta1.shape != eta2.shape:
        raise EstimationError("eta1 and eta2 differ in dimension")
    d = eta1.size

    def value(S: Element) -> float:
        return float(eta1 @ _solve(S.mat, eta2))

    def derivative(S: Element, k: int) -> KLinearForm:
        _check_order(k, max_order, "precision")
        inv = _inverse(S.mat)
        u = eta1 @ inv
        v = inv @ eta2
        sign = (-1.0) ** k

        def step(r, h):
            return (r @ h.mat) @ inv

        def final(r, h):
            return float(r @ h.mat @ v)

        return KLinearForm(
            k, lambda *hs: sign * _perm_sum(k, hs, u, step, final), True, DENSE, d
        )

    def chain(S: Element, k: int) -> ChainSpec:
        inv = _inverse(S.mat)
        return ChainSpec((inv,) * (k + 1), (-1.0) ** k, eta1, eta2)

    family = DerivativeFamily(
        "precision", value, derivative, max_order, lambda S: spd_violation(S.mat)
    )
    structure = ProductStructure("precision", max_order, chain, kind=DENSE, dim=d)
    return family, structure


# ---------------------------------------------------------------------------
# regression projection
# ---------------------------------------------------------------------------


def augment(h: Element) -> np.ndarray:
    """Embed a moment-pair increment ``(a, b)`` as ``[[a, -b], [0, 0]]``."""
    d = h.dim
    out = np.zeros((d + 1, d + 1))
    out[:d, :d] = h.mat
    out[:d, d] = -h.vec
    return out


def build_regression(eta, max_order: int = DEFAULT_MAX_ORDER):
    """Family for ``beta_eta(A, B) = eta^T A^{-1} B`` and its augmented-matrix structure."""
    eta = _vec(eta, "eta")
    d = eta.size

    def value(H: Element) -> float:
        return float(eta @ _solve(H.mat, H.vec))

    def derivative(H: Element, k: int) -> KLinearForm:
        _check_order(k, max_order, "regression")
        inv = _inverse(H.mat)
        u = eta @ inv
        w = inv @ H.vec
        sign = (-1.0) ** k

        def step(r, h):
            return (r @ h.mat) @ inv

        def final(r, h):
            return float(r @ (h.mat @ w - h.vec))

        return KLinearForm(k, lambda *hs: sign * _perm_sum(k, hs, u, step, final), True, PAIR, d)

    def chain(H: Element, k: int) -> ChainSpec:
        inv = _inverse(H.mat)
        inner = np.zeros((d + 1, d + 1))
        inner[:d, :d] = inv
        terminal = np.zeros((d + 1, d + 1))
        terminal[:d, d] = inv @ H.vec
        terminal[d, d] = 1.0
        left = np.append(eta, 0.0)
        right = np.zeros(d + 1)
        right[d] = 1.0
        return ChainSpec((inner,) * k + (terminal,), (-1.0) ** k, left, right)

    family = DerivativeFamily(
        "regression", value, derivative, max_order, lambda H: spd_violation(H.mat)
    )
    structure = ProductStructure("regression", max_order, chain, augment, PAIR, d)
    return family, structure


# ---------------------------------------------------------------------------
# log-determinant
# ---------------------------------------------------------------------------


def build_logdet(dim: int | None = None, max_order: int = DEFAULT_MAX_ORDER):
    """Family and structure for ``log det A`` on positive definite matrices."""

    def value(A: Element) -> float:
        sign, logdet = np.linalg.slogdet(A.mat)
        if sign <= 0:
            raise NonPositiveDeterminant("log det needs a positive determinant")
        return float(logdet)

    def derivative(A: Element, k: int) -> KLinearForm:
        _check_order(k, max_order, "logdet")
        inv = _inverse(A.mat)
        weight = (-1.0) ** (k - 1) / k

        def step(M, h):
            return M @ h.mat @ inv

        def final(M, h):
            return float(np.sum(M * h.mat.T))  # tr(M h)

        return KLinearForm(
            k, lambda *hs: weight * _perm_sum(k, hs, inv, step, final), True, DENSE, dim
        )

    def chain(A: Element, k: int) -> ChainSpec:
        inv = _inverse(A.mat)
        eye = np.eye(A.dim)
        return ChainSpec((inv,) * k + (eye,), (-1.0) ** (k - 1) / k)

    family = DerivativeFamily("logdet", value, derivative, max_order, lambda A: spd_violation(A.mat))
    structure = ProductStructure("logdet", max_order, chain, kind=DENSE, dim=dim)
    return family, structure


# ---------------------------------------------------------------------------
# Stieltjes transform
# ---------------------------------------------------------------------------


def build_stieltjes(B, z: float, margin: float = 1e-6, max_order: int = DEFAULT_MAX_ORDER):
    """Family and structure for ``tr(B (A - zI)^{-1})`` with real ``z <= -margin``."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise EstimationError("B must be square")
    z = float(z)
    if not z <= -margin < 0:
        raise EstimationError(f"z must satisfy z <= -{margin:g}; got {z}")
    d = B.shape[0]

    def resolvent(A: Element) -> np.ndarray:
        return _inverse(A.mat - z * np.eye(A.dim), SingularShift)

    def value(A: Element) -> float:
        return float(np.sum(B * resolvent(A).T))

    def derivative(A: Element, k: int) -> KLinearForm:
        _check_order(k, max_order, "stieltjes")
        R = resolvent(A)
        BR = B @ R
        sign = (-1.0) ** k

        def step(M, h):
            return M @ h.mat @ R

        def final(M, h):
            return float(np.sum((M @ h.mat) * R.T))  # tr(M h R)

        return KLinearForm(k, lambda *hs: sign * _perm_sum(k, hs, BR, step, final), True, DENSE, d)

    def chain(A: Element, k: int) -> ChainSpec:
        R = resolvent(A)
        return ChainSpec((B @ R,) + (R,) * k, (-1.0) ** k)

    def guard(A: Element):
        return spd_violation(A.mat - z * np.eye(A.dim))

    family = DerivativeFamily("stieltjes", value, derivative, max_order, guard)
    structure = ProductStructure("stieltjes", max_order, chain, kind=DENSE, dim=d)
    return family, structure


# ---------------------------------------------------------------------------
# polynomial test functionals
# ---------------------------------------------------------------------------


def quadratic_test_functional(eta1, eta2, max_order: int = DEFAULT_MAX_ORDER) -> DerivativeFamily:
    """``f(S) = eta1^T S^2 eta2``; all derivatives above order two vanish."""
    eta1 = _vec(eta1, "eta1")
    eta2 = _vec(eta2, "eta2")
    d = eta1.size

    def value(S: Element) -> float:
        return float(eta1 @ S.mat @ S.mat @ eta2)

    def derivative(S: Element, k: int) -> KLinearForm:
        _check_order(k, max_order, "quadratic")
        if k == 1:
            return KLinearForm(
                1, lambda h: float(eta1 @ (h.mat @ S.mat + S.mat @ h.mat) @ eta2), True, DENSE, d
            )
        if k == 2:
            return KLinearForm(
                2, lambda h, g: float(eta1 @ (h.mat @ g.mat + g.mat @ h.mat) @ eta2), True, DENSE, d
            )
        return KLinearForm(k, lambda *hs: 0.0, True, DENSE, d)

    return DerivativeFamily("quadratic", value, derivative, max(max_order, 3), degree=2)


def linear_test_functional(eta1, eta2, max_order: int = DEFAULT_MAX_ORDER) -> DerivativeFamily:
    """``f(S) = eta1^T S eta2``."""
    eta1 = _vec(eta1, "eta1")
    eta2 = _vec(eta2, "eta2")
    d = eta1.size

    def derivative(S: Element, k: int) -> KLinearForm:
        _check_order(k, max_order, "linear")
        if k == 1:
            return KLinearForm(1, lambda h: float(eta1 @ h.mat @ eta2), True, DENSE, d)
        return KLinearForm(k, lambda *hs: 0.0, True, DENSE, d)

    return DerivativeFamily(
        "linear", lambda S: float(eta1 @ S.mat @ eta2), derivative, max_order, degree=1
    )


# ---------------------------------------------------------------------------
# finite-difference validation
# ---------------------------------------------------------------------------


def finite_difference_gap(
    family: DerivativeFamily,
    x: Element,
    k: int,
    directions,
    step: float | None = None,
) -> float:
    """Largest relative error of ``D^k f(x)`` against central differences of ``f``.

    ``k`` is 1 or 2. For ``k = 2`` every (ordered) pair of directions is
    checked, diagonal included. Directions are rescaled to unit norm (the
    relative error is invariant to this by multilinearity) and the default step
    is ``1e-4 * max(1, ||x||)``.
    """
    if k not in (1, 2):
        raise ValueError("finite differences are implemented for k = 1, 2")
    dirs = [dv / dv.norm() for dv in directions if dv.norm() > 0]
    h = 1e-4 * max(1.0, x.norm()) if step is None else float(step)
    f = family.value
    for dvec in dirs:
        for t in (-10 * h, 10 * h):
            if family.domain_guard(x + dvec * (t * 1.0)) is not None:
                raise DomainTooTight("x is too close to the domain boundary for this step")
    form = family.derivative(x, k)
    worst = 0.0
    if k == 1:
        for dvec in dirs:
            exact = form(dvec)
            fd = (f(x + dvec * h) - f(x - dvec * h)) / (2 * h)
            worst = max(worst, abs(exact - fd) / max(abs(exact), abs(fd), 1e-8))
        return worst
    for a, b in itertools.product(dirs, repeat=2):
        exact = form(a, b)
        ah, bh = a * h, b * h
        fd = (f(x + ah + bh) - f(x + ah - bh) - f(x - ah + bh) + f(x - ah - bh)) / (4 * h * h)
        worst = max(worst, abs(exact - fd) / max(abs(exact), abs(fd), 1e-6))
    return worst
