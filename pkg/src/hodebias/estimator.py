"""One-sided and cross-fitted higher-order debiased estimators.

Given a pilot ``x`` computed on one half of the data, the one-sided estimator
corrects the plug-in value ``f(x)`` by the degenerate U-statistic terms

    f(x) + sum_{k=1..s} D^k f(x)[U^(k)(x)] / k!

built from the other half; the cross-fitted estimator averages the two
one-sided values obtained by swapping the halves.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

from .elements import Element, FiniteSupportDistribution, KLinearForm
from .errors import (
    EnumerationCapExceeded,
    EstimationError,
    OrderExceedsFamily,
    PilotOutsideDomain,
    UnequalSplit,
)
from .ustat import ORACLE_CAP, USTAT_CAP, complete_ustat


@dataclass(frozen=True)
class DerivativeFamily:
    """A functional ``f`` with its symmetric derivative forms up to ``max_order``.

    ``domain_guard(x)`` returns ``None`` when ``x`` is admissible and a short
    reason string otherwise. ``degree`` is set for polynomial families.
    """

    name: str
    value: Callable[[Element], float]
    derivative: Callable[[Element, int], KLinearForm]
    max_order: int
    domain_guard: Callable[[Element], str | None] = lambda x: None
    degree: int | None = None

    def check(self, x: Element) -> None:
        reason = self.domain_guard(x)
        if reason is not None:
            raise PilotOutsideDomain(f"{self.name}: {reason}")


@dataclass(frozen=True)
class OrderSchedule:
    """Truncation order: fixed, or ``floor(log(e n))`` of the per-split size."""

    mode: str = "fixed"
    s: int | None = 1

    @classmethod
    def fixed(cls, s: int) -> "OrderSchedule":
        if s < 0:
            raise ValueError("order must be non-negative")
        return cls("fixed", int(s))

    @classmethod
    def log_of_n(cls) -> "OrderSchedule":
        return cls("log", None)

    @classmethod
    def parse(cls, spec) -> "OrderSchedule":
        if isinstance(spec, OrderSchedule):
            return spec
        if isinstance(spec, str) and spec.lower() in ("log", "logofn", "log_of_n"):
            return cls.log_of_n()
        return cls.fixed(int(spec))


def resolve_order(schedule: OrderSchedule, n: int) -> int:
    if n < 1:
        raise ValueError("n must be positive")
    if schedule.mode == "log":
        return int(math.floor(1.0 + math.log(n)))
    return int(schedule.s)


@dataclass(frozen=True)
class OneSidedReport:
    value: float
    per_order_terms: tuple[float, ...]
    pilot: Element
    s: int


@dataclass(frozen=True)
class CrossFitReport:
    value: float
    side_a: OneSidedReport
    side_b: OneSidedReport


def _check_order(family: DerivativeFamily, s: int) -> None:
    if s < 0:
        raise ValueError("order must be non-negative")
    if s > family.max_order:
        raise OrderExceedsFamily(f"order {s} exceeds {family.name} max_order {family.max_order}")


def one_sided(
    family: DerivativeFamily,
    pilot: Element,
    sample: Sequence[Element],
    s: int,
    *,
    cap: int = USTAT_CAP,
) -> OneSidedReport:
    """Order-``s`` correction of ``f(pilot)`` by complete U-statistics of ``sample``."""
    _check_order(family, s)
    family.check(pilot)
    n = len(sample)
    for k in range(3, s + 1):
        if k <= n and math.comb(n, k) > cap:
            raise EnumerationCapExceeded(
                f"order {k} needs C({n},{k}) = {math.comb(n, k)} terms; use product_dp.pre_one_sided"
            )
    terms = [family.value(pilot)]
    scale = 1.0
    for k in range(1, s + 1):
        scale /= k
        u = complete_ustat(family.derivative(pilot, k), sample, pilot, cap=cap)
        terms.append(scale * u)
    return OneSidedReport(sum(terms), tuple(terms), pilot, s)


def cross_fit(
    family: DerivativeFamily,
    pilot_fn: Callable[[Sequence[Element]], Element],
    part1: Sequence[Element],
    part2: Sequence[Element],
    schedule: OrderSchedule,
    *,
    cap: int = USTAT_CAP,
) -> CrossFitReport:
    if len(part1) != len(part2) or len(part1) == 0:
        raise UnequalSplit(f"halves have sizes {len(part1)} and {len(part2)}")
    s = resolve_order(schedule, len(part1))
    side_a = one_sided(family, pilot_fn(part2), part1, s, cap=cap)
    side_b = one_sided(family, pilot_fn(part1), part2, s, cap=cap)
    return CrossFitReport(0.5 * (side_a.value + side_b.value), side_a, side_b)


def pilot_invariance_gap(
    family: DerivativeFamily,
    sample: Sequence[Element],
    s: int,
    pilots: Sequence[Element],
) -> float:
    """Largest absolute spread of the one-sided value across ``pilots``.

    For a polynomial ``family`` of degree at most ``s`` the corrected value does
    not depend on the pilot, so the spread is rounding error only.
    """
    if family.degree is not None and family.degree > s:
        raise EstimationError(f"{family.name} has degree {family.degree} > s = {s}")
    values = [one_sided(family, p, sample, s).value for p in pilots]
    return max(values) - min(values) if values else 0.0


def unbiasedness_gap(
    family: DerivativeFamily,
    dist: FiniteSupportDistribution,
    n: int,
    pilot: Element,
    s: int,
) -> float:
    """``|E[one_sided(pilot, sample)] - f(theta)|`` with the expectation enumerated."""
    m = len(dist)
    if m**n > ORACLE_CAP:
        raise EnumerationCapExceeded(f"{m}^{n} samples exceed the oracle cap")
    expect = 0.0
    for idx in itertools.product(range(m), repeat=n):
        p = math.prod(dist.probs[i] for i in idx)
        sample = [dist.atoms[i] for i in idx]
        expect += p * one_sided(family, pilot, sample, s).value
    return abs(expect - family.value(dist.mean()))
