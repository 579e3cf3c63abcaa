"""Permutation-randomised estimator with dynamic-programming chain sums.

For functionals whose derivatives are permutation sums of ordered chains

    D^k f(x)[h_1..h_k] = sum_{sigma} Lambda_k(G_0 h_s(1) G_1 ... h_s(k) G_k)

the order-k term of the one-sided estimator equals the average over all
orderings ``pi`` of the sample of

    F_k(pi) = C(n,k)^-1 sum_{i1<...<ik} Lambda_k(G_0 H_pi(i1) G_1 ... H_pi(ik) G_k),

and each ``F_k(pi)`` is a single ``O(n k)`` recursion over the ordered
increments. Averaging a few random ``pi`` replaces the ``C(n,k)`` enumeration.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .elements import Element, KLinearForm
from .errors import (
    ArityExceedsSample,
    DimensionMismatch,
    EnumerationCapExceeded,
    OrderNotCovered,
    UnequalSplit,
)
from .estimator import (
    CrossFitReport,
    DerivativeFamily,
    OneSidedReport,
    OrderSchedule,
    _check_order,
    resolve_order,
)
from .ustat import ORACLE_CAP, complete_ustat, inv_binom, mean_element


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Order-k chain data at a point: ``Lambda_k`` and the factors ``G_0..G_k``.

    ``Lambda_k(Y) = weight * left @ Y @ right`` when ``left`` is given, and
    ``weight * trace(Y)`` otherwise.
    """

    factors: tuple[np.ndarray, ...]
    weight: float
    left: np.ndarray | None = None
    right: np.ndarray | None = None

    @property
    def order(self) -> int:
        return len(self.factors) - 1

    def start(self) -> np.ndarray:
        """``left @ G_0`` (a row vector), or ``G_0`` itself for trace functionals."""
        if self.left is None:
            return np.array(self.factors[0], dtype=float)
        return self.left @ self.factors[0]

    def finish(self, state: np.ndarray) -> float:
        if self.left is None:
            return self.weight * float(np.trace(state))
        return self.weight * float(state @ self.right)


@dataclass(frozen=True)
class ProductStructure:
    """Chain representation of a derivative family.

    ``embed`` maps a carrier increment to the algebra element the chain
    multiplies (the identity for dense matrices).
    """

    name: str
    max_order: int
    chain: Callable[[Element, int], ChainSpec]
    embed: Callable[[Element], np.ndarray] = lambda h: h.mat
    kind: str | None = None
    dim: int | None = None

    def ordered_value(self, x: Element, k: int, hs: Sequence[Element]) -> float:
        """``T_k(x)[h_1..h_k]``: one ordered chain, evaluated left to right."""
        return self._ordered(self.chain(x, k), hs)

    def _ordered(self, spec: ChainSpec, hs: Sequence[Element]) -> float:
        state = spec.start()
        for j, h in enumerate(hs, start=1):
            state = state @ self.embed(h) @ spec.factors[j]
        return spec.finish(state)

    def ordered_form(self, x: Element, k: int) -> KLinearForm:
        spec = self.chain(x, k)
        return KLinearForm(k, lambda *hs: self._ordered(spec, hs), False, self.kind, self.dim)

    def symmetrized_form(self, x: Element, k: int) -> KLinearForm:
        """``sum_sigma T_k[h_sigma]``; should reproduce the family's k-th derivative."""
        spec = self.chain(x, k)
        perms = list(itertools.permutations(range(k)))

        def fn(*hs):
            return sum(self._ordered(spec, [hs[i] for i in p]) for p in perms)

        return KLinearForm(k, fn, True, self.kind, self.dim)


@dataclass(frozen=True)
class PermutationPlan:
    b: int = 1
    seed: int = 0
    reuse_across_orders: bool = False
    exhaustive: bool = False  # average over all of S_n; test mode for small n

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("b must be at least 1")

    def permutations(self, n: int, k: int) -> Iterator[np.ndarray]:
        if self.exhaustive:
            if math.factorial(n) > ORACLE_CAP:
                raise EnumerationCapExceeded(f"{n}! permutations exceed the oracle cap")
            for p in itertools.permutations(range(n)):
                yield np.array(p)
            return
        order_tag = 0 if self.reuse_across_orders else k
        for r in range(self.b):
            yield rngmod.stream(self.seed, rngmod.PERMUTATION, order_tag, r).permutation(n)


class OpCounter:
    """Counts algebra multiplications performed by the recursion."""

    def __init__(self):
        self.mults = 0


# ---------------------------------------------------------------------------
# the recursion
# ---------------------------------------------------------------------------


def dp_states(
    v0: np.ndarray,
    factors,
    increments: Sequence[np.ndarray],
    k: int,
    counter: OpCounter | None = None,
) -> Iterator[tuple[int, list[np.ndarray]]]:
    """Yield ``(t, [Y_0..Y_k])`` after each processed increment.

    ``Y_j`` after ``t`` steps is the sum over ``t_1 < ... < t_j <= t`` of
    ``v0 H_t1 G_1 H_t2 G_2 ... H_tj G_j``. ``factors[j]`` is ``G_j``.
    """
    n = len(increments)
    if k < 1 or k > n:
        raise ArityExceedsSample(f"chain order {k} with {n} increments")
    Y = [np.array(v0, dtype=float)] + [None] * k
    for t in range(n):
        H = increments[t]
        if H.shape[0] != Y[0].shape[-1]:
            raise DimensionMismatch(f"increment of shape {H.shape} against state {Y[0].shape}")
        # j runs downward so Y[j-1] still holds the previous step's value
        for j in range(min(t + 1, k), 0, -1):
            step = (Y[j - 1] @ H) @ factors[j]
            Y[j] = step if Y[j] is None else Y[j] + step
        if counter is not None:
            counter.mults += 2 * min(t + 1, k)
        yield t + 1, Y


def dp_chain(v0, factors, increments, k, counter: OpCounter | None = None) -> np.ndarray:
    """``sum_{t1<...<tk} v0 H_t1 G_1 ... H_tk G_k`` by the subset recursion."""
    Y = None
    for _, Y in dp_states(v0, factors, increments, k, counter):
        pass
    return Y[k]


class _Embedded(Sequence):
    """Increments ``embed(W_perm[t] - shift)`` built on access."""

    def __init__(self, structure: ProductStructure, increments, perm=None):
        self._s = structure
        self._inc = increments
        self._perm = perm

    def __len__(self):
        return len(self._inc)

    def __getitem__(self, t):
        i = t if self._perm is None else int(self._perm[t])
        return self._s.embed(self._inc[i])


class _Centered(Sequence):
    def __init__(self, sample, shift: Element):
        self._sample = sample
        self._shift = shift

    def __len__(self):
        return len(self._sample)

    def __getitem__(self, i):
        return self._sample[i] - self._shift


def centered(sample: Sequence[Element], shift: Element) -> Sequence[Element]:
    """Lazy view of ``W_i - shift``."""
    return _Centered(sample, shift)


def _structure_covers(structure: ProductStructure, k: int) -> None:
    if k > structure.max_order:
        raise OrderNotCovered(f"{structure.name} covers orders up to {structure.max_order}, not {k}")


def fk_pi(
    structure: ProductStructure,
    x: Element,
    increments: Sequence[Element],
    perm,
    k: int,
    counter: OpCounter | None = None,
    spec: ChainSpec | None = None,
) -> float:
    """``F_k(pi)`` through the recursion; ``increments`` are ``W_i - pilot``."""
    n = len(increments)
    if k > n:
        raise ArityExceedsSample(f"order {k} exceeds sample size {n}")
    _structure_covers(structure, k)
    spec = spec or structure.chain(x, k)
    Yk = dp_chain(spec.start(), spec.factors, _Embedded(structure, increments, perm), k, counter)
    return inv_binom(n, k) * spec.finish(Yk)


def fk_bruteforce(structure: ProductStructure, x: Element, increments, perm, k: int) -> float:
    """``F_k(pi)`` by direct enumeration of increasing index tuples."""
    n = len(increments)
    if k > n:
        raise ArityExceedsSample(f"order {k} exceeds sample size {n}")
    if math.comb(n, k) > ORACLE_CAP:
        raise EnumerationCapExceeded(f"C({n},{k}) exceeds the oracle cap")
    spec = structure.chain(x, k)
    hs = [increments[int(i)] for i in perm]
    acc = 0.0
    for idx in itertools.combinations(range(n), k):
        acc += structure._ordered(spec, [hs[i] for i in idx])
    return acc * inv_binom(n, k)


def permutation_average_gap(
    structure: ProductStructure,
    x: Element,
    sample: Sequence[Element],
    pilot: Element,
    k: int,
    family: DerivativeFamily,
) -> float:
    """``|mean_pi F_k(pi) - D^k f(x)[U^(k)(pilot)] / k!|`` over all of ``S_n``."""
    n = len(sample)
    if math.factorial(n) > 720:
        raise EnumerationCapExceeded("permutation averaging is limited to n <= 6")
    inc = [w - pilot for w in sample]
    spec = structure.chain(x, k)
    total = 0.0
    for p in itertools.permutations(range(n)):
        total += fk_pi(structure, x, inc, p, k, spec=spec)
    avg = total / math.factorial(n)
    target = complete_ustat(family.derivative(x, k), sample, pilot) / math.factorial(k)
    return abs(avg - target)


def pre_one_sided(
    family: DerivativeFamily,
    structure: ProductStructure,
    pilot: Element,
    sample: Sequence[Element],
    s: int,
    plan: PermutationPlan,
    counter: OpCounter | None = None,
) -> OneSidedReport:
    """Order-``s`` one-sided estimator with permutation-randomised terms ``k >= 2``."""
    _check_order(family, s)
    family.check(pilot)
    for k in range(2, s + 1):
        _structure_covers(structure, k)
    n = len(sample)
    terms = [family.value(pilot)]
    if s >= 1:
        d1 = family.derivative(pilot, 1)
        terms.append(complete_ustat(d1, sample, pilot))
    inc = centered(sample, pilot)
    for k in range(2, s + 1):
        if k > n:
            raise ArityExceedsSample(f"order {k} exceeds sample size {n}")
        spec = structure.chain(pilot, k)
        acc = 0.0
        count = 0
        for perm in plan.permutations(n, k):
            acc += fk_pi(structure, pilot, inc, perm, k, counter, spec)
            count += 1
        terms.append(acc / count)
    return OneSidedReport(sum(terms), tuple(terms), pilot, s)


def pre_cross_fit(
    family: DerivativeFamily,
    structure: ProductStructure,
    pilot_fn: Callable[[Sequence[Element]], Element],
    part1: Sequence[Element],
    part2: Sequence[Element],
    schedule: OrderSchedule,
    plan: PermutationPlan,
) -> CrossFitReport:
    """Cross-fitted permutation-randomised estimator; both sides share permutations."""
    if len(part1) != len(part2) or len(part1) == 0:
        raise UnequalSplit(f"halves have sizes {len(part1)} and {len(part2)}")
    s = resolve_order(schedule, len(part1))
    side_a = pre_one_sided(family, structure, pilot_fn(part2), part1, s, plan)
    side_b = pre_one_sided(family, structure, pilot_fn(part1), part2, s, plan)
    return CrossFitReport(0.5 * (side_a.value + side_b.value), side_a, side_b)


__all__ = [
    "ChainSpec",
    "OpCounter",
    "PermutationPlan",
    "ProductStructure",
    "centered",
    "dp_chain",
    "dp_states",
    "fk_bruteforce",
    "fk_pi",
    "permutation_average_gap",
    "pre_cross_fit",
    "pre_one_sided",
]
