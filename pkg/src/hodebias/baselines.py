"""Pilot estimators and competing bias-corrected estimators.

Pilots map a sample of observations ``W_i`` to an estimate of the mean
parameter. The competitors (plug-in, delete-one jackknife, iterated
Gaussian-multiplier bootstrap, same-sample expansion and the blockwise
Taylor estimator) all work on the full sample and share the
:class:`~hodebias.estimator.DerivativeFamily` interface.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .elements import PAIR, Element, take
from .errors import (
    DegenerateResample,
    EmptySample,
    InsufficientData,
    NonSymmetric,
    TooManyBlocks,
)
from .estimator import DerivativeFamily, one_sided
from .ustat import mean_element, weighted_sum_element

MAX_REDRAWS = 100


# ---------------------------------------------------------------------------
# pilots
# ---------------------------------------------------------------------------


def fit_sample_moments(sample: Sequence[Element]) -> Element:
    """Method-of-moments pilot: the sample mean of the observations."""
    return mean_element(sample)


def fit_median_of_means(sample: Sequence[Element], blocks: int) -> Element:
    """Coordinate-wise median of block means over a contiguous partition."""
    n = len(sample)
    if n == 0:
        raise EmptySample("empty sample")
    if blocks < 1 or blocks > n:
        raise TooManyBlocks(f"{blocks} blocks for {n} observations")
    if blocks == 1:
        return mean_element(sample)
    means = [mean_element(take(sample, idx)) for idx in np.array_split(np.arange(n), blocks)]
    mat = np.median(np.stack([m.mat for m in means]), axis=0)
    if means[0].kind == PAIR:
        return Element(PAIR, mat, np.median(np.stack([m.vec for m in means]), axis=0))
    return Element(means[0].kind, mat)


def eig_floor(M, epsilon: float):
    """Clip eigenvalues of a symmetric matrix at ``epsilon * max(1, ||M||_op)``.

    Accepts an ndarray or an :class:`Element` (for moment pairs only the
    matrix part is floored). Inputs that need no clipping come back unchanged.
    """
    if isinstance(M, Element):
        mat = eig_floor(M.mat, epsilon)
        if mat is M.mat:
            return M
        return Element(M.kind, mat, M.vec)
    M = np.asarray(M, dtype=float)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if not np.allclose(M, M.T, rtol=0, atol=1e-10 * scale):
        raise NonSymmetric("eig_floor needs a symmetric matrix")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    floor = epsilon * max(1.0, float(np.max(np.abs(w))))
    if w[0] > floor:
        return M
    w = np.maximum(w, floor)
    out = (V * w) @ V.T
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class PilotEstimator:
    """``variant`` is ``"moments"``, ``"median_of_means"`` or ``"eig_floor"``."""

    variant: str = "moments"
    blocks: int = 1
    epsilon: float = 1e-6
    inner: "PilotEstimator | None" = None

    def __post_init__(self):
        if self.variant not in ("moments", "median_of_means", "eig_floor"):
            raise ValueError(f"unknown pilot variant {self.variant!r}")
        if self.blocks < 1:
            raise ValueError("blocks must be at least 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def __call__(self, sample: Sequence[Element]) -> Element:
        if self.variant == "moments":
            return fit_sample_moments(sample)
        if self.variant == "median_of_means":
            return fit_median_of_means(sample, self.blocks)
        inner = self.inner or PilotEstimator()
        return eig_floor(inner(sample), self.epsilon)


# ---------------------------------------------------------------------------
# competitors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PluginFunctional:
    """``f(moment_map(sample))``; ``moment_map=None`` means the sample mean."""

    family: DerivativeFamily
    moment_map: Callable[[Sequence[Element]], Element] | None = None

    def moment(self, sample: Sequence[Element]) -> Element:
        return mean_element(sample) if self.moment_map is None else self.moment_map(sample)

    def at(self, theta: Element) -> float:
        self.family.check(theta)
        return self.family.value(theta)


@dataclass(frozen=True)
class BaselineConfig:
    """``kind`` is one of plugin, jackknife, ib, hodse, kl."""

    kind: str = "plugin"
    order: int = 0
    mc_size: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("plugin", "jackknife", "ib", "hodse", "kl"):
            raise ValueError(f"unknown baseline {self.kind!r}")
        if self.order < 0 or self.mc_size < 1:
            raise ValueError("order must be >= 0 and mc_size >= 1")


def plugin_estimate(plugin: PluginFunctional, sample: Sequence[Element]) -> float:
    return plugin.at(plugin.moment(sample))


def jackknife_estimate(plugin: PluginFunctional, sample: Sequence[Element]) -> float:
    """Delete-one jackknife ``n f(all) - (n - 1) mean_i f(all but i)``."""
    n = len(sample)
    if n < 2:
        raise InsufficientData("the jackknife needs at least two observations")
    full = plugin.moment(sample)
    if plugin.moment_map is None:
        total = full * n
        loo = (plugin.at((total - w) / (n - 1)) for w in sample)
    else:
        idx = np.arange(n)
        loo = (plugin.at(plugin.moment(take(sample, np.delete(idx, i)))) for i in range(n))
    acc = math.fsum(loo)
    return n * plugin.at(full) - (n - 1) * (acc / n)


def iterated_bootstrap_estimate(
    plugin: PluginFunctional,
    sample: Sequence[Element],
    order: int,
    mc_size: int = 40,
    seed: int = 0,
) -> float:
    """Neumann-series bias correction with a Gaussian-multiplier bootstrap chain.

    Each of ``mc_size`` chains starts at the pilot and moves by
    ``state + n^-1 sum_i g_i (W_i - state)`` with ``g_i ~ N(0, 1)``. With
    ``T^j f`` the chain average of ``f`` after ``j`` moves, the order-``q``
    estimate is ``sum_j (-1)^j C(q+1, j+1) T^j f``, i.e. ``sum_j (-1)^j B^j f``
    with ``B = T - I``. Moves leaving the domain are redrawn (at most 100 times).
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    theta = plugin.moment(sample)
    base = plugin.at(theta)
    if order == 0:
        return base
    n = len(sample)
    sums = np.zeros(order + 1)
    for r in range(mc_size):
        gen = rngmod.stream(seed, rngmod.BOOTSTRAP, r)
        state = theta
        for j in range(1, order + 1):
            for _ in range(MAX_REDRAWS):
                g = gen.standard_normal(n)
                cand = state + (weighted_sum_element(sample, g) - state * g.sum()) / n
                if plugin.family.domain_guard(cand) is None:
                    break
            else:
                raise DegenerateResample(f"no admissible draw in {MAX_REDRAWS} attempts")
            state = cand
            sums[j] += plugin.family.value(state)
    est = base * (order + 1)  # j = 0 term: C(q+1, 1) f(theta)
    for j in range(1, order + 1):
        est += (-1) ** j * math.comb(order + 1, j + 1) * sums[j] / mc_size
    return float(est)


def hodse_estimate(family: DerivativeFamily, sample: Sequence[Element], order: int) -> float:
    """Same-sample expansion: corrections anchored at the full-sample mean."""
    return one_sided(family, mean_element(sample), sample, order).value


def kl_blocks(n: int, order: int) -> list[np.ndarray]:
    """Index blocks: pilot block first, then ``k`` blocks for each level ``k``."""
    count = 1 + order * (order + 1) // 2
    if n < count:
        raise InsufficientData(f"order {order} needs {count} blocks but n = {n}")
    m = n // count
    first = m + n - m * count
    cuts = [0, first] + [first + m * (i + 1) for i in range(count - 1)]
    return [np.arange(cuts[i], cuts[i + 1]) for i in range(count)]


def kl_blockwise_estimate(
    family: DerivativeFamily,
    sample: Sequence[Element],
    order: int,
    seed: int | None = None,
) -> float:
    """Blockwise Taylor estimator with independent base estimators per level.

    ``f(t0) + sum_k D^k f(t0)[t_k1 - t0, ..., t_kk - t0] / k!`` where every
    ``t`` is the mean of its own contiguous block. A ``seed`` shuffles the
    observations before blocking.
    """
    n = len(sample)
    blocks = kl_blocks(n, order)
    if seed is not None:
        perm = rngmod.stream(seed, rngmod.DATA).permutation(n)
        blocks = [perm[b] for b in blocks]
    means = [mean_element(take(sample, b)) for b in blocks]
    t0 = means[0]
    family.check(t0)
    value = family.value(t0)
    pos = 1
    scale = 1.0
    for k in range(1, order + 1):
        scale /= k
        incs = [m - t0 for m in means[pos : pos + k]]
        pos += k
        value += scale * family.derivative(t0, k)(*incs)
    return value


def run_baseline(
    config: BaselineConfig,
    family: DerivativeFamily,
    sample: Sequence[Element],
) -> float:
    plugin = PluginFunctional(family)
    if config.kind == "plugin":
        return plugin_estimate(plugin, sample)
    if config.kind == "jackknife":
        return jackknife_estimate(plugin, sample)
    if config.kind == "ib":
        return iterated_bootstrap_estimate(plugin, sample, config.order, config.mc_size, config.seed)
    if config.kind == "hodse":
        return hodse_estimate(family, sample, config.order)
    return kl_blockwise_estimate(family, sample, config.order)


__all__ = [
    "BaselineConfig",
    "PilotEstimator",
    "PluginFunctional",
    "eig_floor",
    "fit_median_of_means",
    "fit_sample_moments",
    "hodse_estimate",
    "iterated_bootstrap_estimate",
    "jackknife_estimate",
    "kl_blockwise_estimate",
    "kl_blocks",
    "plugin_estimate",
    "run_baseline",
]
