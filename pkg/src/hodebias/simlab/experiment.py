"""Squared-error-ratio experiment and Kolmogorov-Smirnov normality study."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from .. import rng as rngmod
from ..baselines import (
    PilotEstimator,
    PluginFunctional,
    hodse_estimate,
    iterated_bootstrap_estimate,
    jackknife_estimate,
    kl_blockwise_estimate,
    plugin_estimate,
)
from ..elements import GramSample, RegressionSample
from ..errors import ConfigError, EmptyStudy, EstimationError
from ..estimator import OrderSchedule, cross_fit
from ..functionals import build_precision, build_regression
from ..product_dp import PermutationPlan, pre_cross_fit
from .models import (
    GramModel,
    dimension_for,
    gen_gaussian,
    gen_regression,
    oracle_sigma,
    sigma_from_spec,
    true_beta_eta,
)

log = logging.getLogger(__name__)

ESTIMATOR_NAMES = {
    "plugin": "Plug-in",
    "jackknife": "Jackknife",
    "hodse": "HODSE",
    "kl": "K&L",
    "ib": "IB",
    "ck_full": "C&K Full",
    "ck_pre": "C&K PRE",
}
ORDERLESS = ("plugin", "jackknife")

DEFAULT_ROSTER = (
    {"estimator": "plugin", "order": 0},
    {"estimator": "jackknife", "order": 0},
    {"estimator": "hodse", "order": 2},
    {"estimator": "kl", "order": 2},
    {"estimator": "ib", "order": 2},
    {"estimator": "ck_full", "order": 2},
    {"estimator": "ck_pre", "order": 2},
)
DEFAULT_GAMMAS = tuple(round(0.15 + 0.05 * i, 2) for i in range(13))
DEFAULT_SEED = 20260101


def estimator_label(name: str, order: int) -> str:
    base = ESTIMATOR_NAMES[name]
    return base if name in ORDERLESS else f"{base} (o{order})"


def _from_dict(cls, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(f"{cls.__name__} config must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from None


# ---------------------------------------------------------------------------
# ratio experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegressionModelConfig:
    N_total: int = 1000
    gamma_grid: tuple = DEFAULT_GAMMAS
    rho: float = 0.6
    replications: int = 100
    seed: int = DEFAULT_SEED
    roster: tuple = DEFAULT_ROSTER
    b: int = 1
    ib_mc: int = 40
    eig_floor: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "gamma_grid", tuple(float(g) for g in self.gamma_grid))
        roster = tuple(
            {"estimator": str(r["estimator"]), "order": int(r.get("order", 0))} for r in self.roster
        )
        object.__setattr__(self, "roster", roster)
        if self.N_total < 4 or self.N_total % 2:
            raise ValueError("N_total must be even and at least 4")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not roster:
            raise ValueError("roster is empty")
        for r in roster:
            if r["estimator"] not in ESTIMATOR_NAMES:
                raise ValueError(f"unknown estimator {r['estimator']!r}")
            if r["order"] < 0:
                raise ValueError("orders must be non-negative")
        if not any(r["estimator"] == "plugin" for r in roster):
            raise ValueError("the roster must include the plug-in estimator")
        if self.b < 1 or self.ib_mc < 1:
            raise ValueError("b and ib_mc must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "RegressionModelConfig":
        return _from_dict(cls, data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["gamma_grid"] = list(self.gamma_grid)
        out["roster"] = [dict(r) for r in self.roster]
        return out


@dataclass
class RatioCell:
    estimator: str
    order: int
    median_ratio: float
    mean_ratio: float
    failures: int
    reps: int


@dataclass
class RatioRow:
    gamma: float
    d: int
    cells: list[RatioCell]
    sq_errors: dict[str, list[float]] = field(default_factory=dict)


@dataclass
class RatioTable:
    rows: list[RatioRow]
    seed: int
    config: dict

    def cell(self, gamma: float, label: str) -> RatioCell:
        for row in self.rows:
            if math.isclose(row.gamma, gamma):
                for c in row.cells:
                    if estimator_label(c.estimator, c.order) == label:
                        return c
        raise KeyError((gamma, label))


def _gamma_tag(gamma: float) -> int:
    return int(round(gamma * 10_000))


def replicate_estimates(config: RegressionModelConfig, gamma: float, rep: int) -> dict[str, float]:
    """All roster estimates for one replication (NaN marks a failure)."""
    d = dimension_for(config.N_total, gamma)
    gtag = _gamma_tag(gamma)
    gen = rngmod.stream(config.seed, rngmod.DATA, gtag, rep)
    X, Y = gen_regression(config.N_total, d, config.rho, gen)
    sample = RegressionSample(X, Y)
    half = config.N_total // 2
    part1, part2 = sample[:half], sample[half:]
    eta = np.zeros(d)
    eta[0] = 1.0
    family, structure = build_regression(eta)
    plugin = PluginFunctional(family)
    pilot = PilotEstimator("eig_floor", epsilon=config.eig_floor)
    ib_seed = rngmod.derive_seed(config.seed, rngmod.BOOTSTRAP, gtag, rep)
    plan = PermutationPlan(
        b=config.b, seed=rngmod.derive_seed(config.seed, rngmod.PERMUTATION, gtag, rep)
    )

    out = {}
    for entry in config.roster:
        name, order = entry["estimator"], entry["order"]
        label = estimator_label(name, order)
        try:
            if name == "plugin":
                est = plugin_estimate(plugin, sample)
            elif name == "jackknife":
                est = jackknife_estimate(plugin, sample)
            elif name == "hodse":
                est = hodse_estimate(family, sample, order)
            elif name == "kl":
                est = kl_blockwise_estimate(family, sample, order)
            elif name == "ib":
                est = iterated_bootstrap_estimate(plugin, sample, order, config.ib_mc, ib_seed)
            elif name == "ck_full":
                est = cross_fit(family, pilot, part1, part2, OrderSchedule.fixed(order)).value
            else:
                est = pre_cross_fit(
                    family, structure, pilot, part1, part2, OrderSchedule.fixed(order), plan
                ).value
        except (EstimationError, np.linalg.LinAlgError, FloatingPointError) as err:
            log.debug("gamma=%s rep=%d %s failed: %s", gamma, rep, label, err)
            est = float("nan")
        out[label] = float(est) if np.isfinite(est) else float("nan")
    return out


def _summarise(config: RegressionModelConfig, gamma: float, per_rep: list[dict]) -> RatioRow:
    truth = true_beta_eta()
    labels = [estimator_label(r["estimator"], r["order"]) for r in config.roster]
    sq = {lab: np.array([(e[lab] - truth) ** 2 for e in per_rep]) for lab in labels}
    base = sq[estimator_label("plugin", 0)]
    cells = []
    for entry, lab in zip(config.roster, labels):
        errs = sq[lab]
        ok = np.isfinite(errs) & np.isfinite(base)
        failures = int(np.sum(~np.isfinite(errs)))
        if ok.any():
            med = float(np.median(errs[ok]) / np.median(base[ok]))
            mean = float(np.mean(errs[ok]) / np.mean(base[ok]))
        else:
            med = mean = float("nan")
        cells.append(RatioCell(entry["estimator"], entry["order"], med, mean, failures, len(per_rep)))
    return RatioRow(
        gamma, dimension_for(config.N_total, gamma), cells, {k: v.tolist() for k, v in sq.items()}
    )


def run_ratio_experiment(config: RegressionModelConfig, threads: int = 1) -> RatioTable:
    """Median and mean squared-error ratios against the plug-in, per dimension."""
    tasks = [(g, r) for g in config.gamma_grid for r in range(config.replications)]
    if threads == 1:
        results = [replicate_estimates(config, g, r) for g, r in tasks]
    else:
        results = Parallel(n_jobs=threads)(
            delayed(replicate_estimates)(config, g, r) for g, r in tasks
        )
    rows = []
    R = config.replications
    for i, gamma in enumerate(config.gamma_grid):
        rows.append(_summarise(config, gamma, results[i * R : (i + 1) * R]))
    return RatioTable(rows, config.seed, config.to_dict())


# ---------------------------------------------------------------------------
# normality study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GramModelConfig:
    n_per_split: int = 1000
    d: int = 10
    sigma_spec: object = field(default_factory=lambda: {"ar1": 0.6})
    eta1: tuple | None = None
    eta2: tuple | None = None
    order: object = 2
    replications: int = 500
    seed: int = DEFAULT_SEED
    estimator: str = "ck_full"
    b: int = 1
    standardization: str = "oracle"
    oracle_mc_draws: int = 1_000_000
    eig_floor: float = 1e-6

    def __post_init__(self):
        if self.n_per_split < 1 or self.d < 1:
            raise ValueError("n_per_split and d must be positive")
        if self.replications < 0:
            raise ValueError("replications must be non-negative")
        if self.estimator not in ("ck_full", "ck_pre"):
            raise ValueError("estimator must be ck_full or ck_pre")
        if self.standardization not in ("oracle", "plugin"):
            raise ValueError("standardization must be oracle or plugin")
        OrderSchedule.parse(self.order)
        sigma_from_spec(self.sigma_spec, 1)
        for name in ("eta1", "eta2"):
            v = getattr(self, name)
            if v is not None:
                v = tuple(float(x) for x in v)
                if len(v) != self.d or not any(v):
                    raise ValueError(f"{name} must be a nonzero vector of length d")
                object.__setattr__(self, name, v)
        if self.n_per_split <= self.d:
            log.warning("n_per_split=%d does not exceed d=%d", self.n_per_split, self.d)

    @classmethod
    def from_dict(cls, data: dict) -> "GramModelConfig":
        return _from_dict(cls, data)

    def to_dict(self) -> dict:
        out = asdict(self)
        for name in ("eta1", "eta2"):
            if out[name] is not None:
                out[name] = list(out[name])
        return out

    def model(self) -> GramModel:
        e1 = np.eye(self.d)[0]
        eta1 = e1 if self.eta1 is None else np.array(self.eta1)
        eta2 = e1 if self.eta2 is None else np.array(self.eta2)
        return GramModel(sigma_from_spec(self.sigma_spec, self.d), eta1, eta2)


@dataclass
class KSReport:
    estimator: str
    ks_statistic: float
    replications: int
    standardization: str
    sigma: float | None
    seed: int
    config: dict
    z_scores: list[float] = field(default_factory=list)


def _ks_replicate(config: GramModelConfig, model: GramModel, rep: int) -> tuple[float, float]:
    """(estimate, plug-in sigma) for one replication."""
    n = config.n_per_split
    gen = rngmod.stream(config.seed, rngmod.REPLICATION, rep)
    X = gen_gaussian(2 * n, config.d, config.sigma_spec, gen)
    part1, part2 = GramSample(X[:n]), GramSample(X[n:])
    family, structure = build_precision(model.eta1, model.eta2)
    pilot = PilotEstimator("eig_floor", epsilon=config.eig_floor)
    schedule = OrderSchedule.parse(config.order)
    if config.estimator == "ck_pre":
        plan = PermutationPlan(b=config.b, seed=rngmod.derive_seed(config.seed, rngmod.PERMUTATION, rep))
        est = pre_cross_fit(family, structure, pilot, part1, part2, schedule, plan).value
    else:
        est = cross_fit(family, pilot, part1, part2, schedule).value
    S = X.T @ X / (2 * n)
    u = np.linalg.solve(S, model.eta1)
    v = np.linalg.solve(S, model.eta2)
    sigma_hat = float(np.std((X @ u) * (X @ v), ddof=1))
    return est, sigma_hat


def run_ks_study(config: GramModelConfig, threads: int = 1) -> KSReport:
    """KS distance between standardised cross-fitted errors and ``N(0, 1)``."""
    if config.replications < 1:
        raise EmptyStudy("the study needs at least one replication")
    model = config.model()
    reps = range(config.replications)
    if threads == 1:
        results = [_ks_replicate(config, model, r) for r in reps]
    else:
        results = Parallel(n_jobs=threads)(delayed(_ks_replicate)(config, model, r) for r in reps)
    est = np.array([r[0] for r in results])
    root_n = math.sqrt(2 * config.n_per_split)
    if config.standardization == "oracle":
        orc = oracle_sigma(model, config.oracle_mc_draws, rngmod.stream(config.seed, rngmod.ORACLE))
        sigma = orc.sigma
        z = root_n * (est - model.target()) / sigma
    else:
        sigma = None
        z = root_n * (est - model.target()) / np.array([r[1] for r in results])
    ks = float(stats.kstest(z, "norm").statistic)
    return KSReport(
        config.estimator, ks, config.replications, config.standardization, sigma, config.seed,
        config.to_dict(), z.tolist(),
    )
