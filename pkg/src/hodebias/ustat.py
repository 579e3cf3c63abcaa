"""Complete tensor U-statistics and exact enumeration oracles.

All oracles here enumerate finite configurations exactly and refuse to run
beyond :data:`ORACLE_CAP` tuples.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence

import numpy as np

from .elements import Element, FiniteSupportDistribution, KLinearForm
from .errors import (
    ArityExceedsSample,
    AsymmetricForm,
    DimensionMismatch,
    EmptySample,
    EnumerationCapExceeded,
)

ORACLE_CAP = 1_000_000
USTAT_CAP = 5_000_000


def inv_binom(n: int, k: int) -> float:
    """``1 / C(n, k)`` in double precision."""
    c = math.comb(n, k)
    if c < 1e300:
        # float() of an int is correctly rounded, so this is exact to one ulp
        return 1.0 / float(c)
    logc = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    return math.exp(-logc)


def mean_element(sample: Sequence[Element]) -> Element:
    """Coordinate-wise average of a non-empty sample."""
    if len(sample) == 0:
        raise EmptySample("mean of an empty sample")
    fast = getattr(sample, "mean", None)
    if fast is not None:
        return fast()
    first = sample[0]
    mat = np.array(first.mat, dtype=float)
    vec = None if first.vec is None else np.array(first.vec, dtype=float)
    for w in sample[1:]:
        first.check_compatible(w)
        mat += w.mat
        if vec is not None:
            vec += w.vec
    n = len(sample)
    return Element(first.kind, mat / n, None if vec is None else vec / n)


def weighted_sum_element(sample: Sequence[Element], weights) -> Element:
    """``sum_i weights[i] * W_i``."""
    weights = np.asarray(weights, dtype=float)
    if len(sample) == 0:
        raise EmptySample("weighted sum of an empty sample")
    if weights.shape != (len(sample),):
        raise DimensionMismatch("one weight per observation is required")
    fast = getattr(sample, "weighted_sum", None)
    if fast is not None:
        return fast(weights)
    out = sample[0] * weights[0]
    for w, g in zip(sample[1:], weights[1:]):
        out = out + w * g
    return out


def _check_sample(form: KLinearForm, sample: Sequence[Element], shift: Element) -> int:
    if not form.symmetric:
        raise AsymmetricForm("complete U-statistics require a symmetric form")
    n = len(sample)
    k = form.arity
    if n == 0:
        raise EmptySample("empty sample")
    if k > n:
        raise ArityExceedsSample(f"order {k} exceeds sample size {n}")
    sample[0].check_compatible(shift)
    if not form.accepts(shift):
        raise DimensionMismatch(f"form expects ({form.kind}, {form.dim}), got {shift.signature}")
    return n


def complete_ustat(
    form: KLinearForm,
    sample: Sequence[Element],
    shift: Element,
    *,
    cap: int = USTAT_CAP,
    method: str = "auto",
) -> float:
    """Average of ``form(W_j1 - shift, ..., W_jk - shift)`` over ``j1 < ... < jk``.

    With ``method="auto"`` orders one and two use the exact reductions
    ``T[mean - shift]`` and ``(T[S, S] - sum_i T[h_i, h_i]) / 2`` (``S`` the sum
    of the centred increments); higher orders and ``method="enumerate"`` walk
    every increasing index tuple, subject to ``cap``.
    """
    n = _check_sample(form, sample, shift)
    k = form.arity
    if k == 0:
        return form()
    if method == "auto" and k == 1:
        return form(mean_element(sample) - shift)
    if method == "auto" and k == 2:
        total = (mean_element(sample) - shift) * n
        diag = 0.0
        for w in sample:
            h = w - shift
            diag += form(h, h)
        return 0.5 * (form(total, total) - diag) * inv_binom(n, 2)
    count = math.comb(n, k)
    if count > cap:
        raise EnumerationCapExceeded(
            f"C({n},{k}) = {count} exceeds the cap {cap}; use the product_dp path"
        )
    hs = [w - shift for w in sample]
    acc = 0.0
    for idx in itertools.combinations(range(n), k):
        acc += form(*(hs[i] for i in idx))
    return acc * inv_binom(n, k)


def _check_enum(size: int, power: int, cap: int = ORACLE_CAP) -> None:
    if size**power > cap:
        raise EnumerationCapExceeded(f"{size}^{power} tuples exceed the oracle cap {cap}")


def kernel_variance_enum(form: KLinearForm, dist: FiniteSupportDistribution) -> float:
    """Exact variance of ``form(W_1 - theta, ..., W_k - theta)`` under ``dist``."""
    k = form.arity
    m = len(dist)
    _check_enum(m, k)
    theta = dist.mean()
    hs = [a - theta for a in dist.atoms]
    first = second = 0.0
    for idx in itertools.product(range(m), repeat=k):
        p = math.prod(dist.probs[i] for i in idx)
        v = form(*(hs[i] for i in idx))
        first += p * v
        second += p * v * v
    return max(second - first * first, 0.0)


def ustat_variance_direct(form: KLinearForm, dist: FiniteSupportDistribution, n: int) -> float:
    """Exact variance of the complete U-statistic over all ``support^n`` samples."""
    m = len(dist)
    _check_enum(m, n)
    if form.arity > n:
        raise ArityExceedsSample(f"order {form.arity} exceeds sample size {n}")
    theta = dist.mean()
    first = second = 0.0
    for idx in itertools.product(range(m), repeat=n):
        p = math.prod(dist.probs[i] for i in idx)
        v = complete_ustat(form, [dist.atoms[i] for i in idx], theta, method="enumerate")
        first += p * v
        second += p * v * v
    return max(second - first * first, 0.0)


def conditional_degeneracy_gap(form: KLinearForm, dist: FiniteSupportDistribution, slot: int) -> float:
    """Largest ``|E[form(...) | all slots except slot]|`` over conditioning values.

    ``slot`` is 1-based.
    """
    k = form.arity
    if not 1 <= slot <= k:
        raise ValueError(f"slot must lie in 1..{k}")
    m = len(dist)
    _check_enum(m, k)
    theta = dist.mean()
    hs = [a - theta for a in dist.atoms]
    worst = 0.0
    for rest in itertools.product(range(m), repeat=k - 1):
        cond = 0.0
        for a, p in enumerate(dist.probs):
            args = list(rest)
            args.insert(slot - 1, a)
            cond += p * form(*(hs[i] for i in args))
        worst = max(worst, abs(cond))
    return worst


def shift_binomial_gap(
    form: KLinearForm,
    sample: Sequence[Element],
    theta: Element,
    theta_tilde: Element,
) -> float:
    """Absolute gap in ``U(theta~) = sum_j C(l, j) h^j (x) U^(l-j)(theta)``, ``h = theta - theta~``.

    Both sides are evaluated through :func:`complete_ustat`.
    """
    l = form.arity
    left = complete_ustat(form, sample, theta_tilde)
    h = theta - theta_tilde
    right = 0.0
    for j in range(l + 1):
        part = form.fix(h, j)
        if j == l:
            val = part()
        else:
            val = complete_ustat(part, sample, theta)
        right += math.comb(l, j) * val
    return abs(left - right)
