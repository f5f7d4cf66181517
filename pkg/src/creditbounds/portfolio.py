"""Portfolio data model and ingestion.

Borrowers carry a default probability, an exposure weight (fraction of the
total outstanding amount), a loss-given-default specification and the
correlation/dependence-parameter uncertainty intervals the bound engine
works with.  Portfolios are loaded from CSV (schema below) or built
synthetically; scenarios bundle a portfolio with the model family, the
confidence levels and the Monte Carlo configuration and are read from JSON.

Portfolio CSV schema (UTF-8, header required)::

    name,amount,pd,lgd_kind,lgd_mean,lgd_vol,corr_lo,corr_hi

``corr_lo``/``corr_hi`` are optional; when absent the interval defaults to
the regulatory interpolation value plus/minus ``corr_shift``.
``lgd_kind`` is ``deterministic`` (uses ``lgd_mean``) or ``beta`` (uses
``lgd_mean`` and ``lgd_vol``).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .copulas import clayton_theta_matching_gaussian

__all__ = [
    "ConfigError",
    "DeterministicLgd",
    "BetaLgd",
    "Borrower",
    "McConfig",
    "Scenario",
    "MODEL_NAMES",
    "irb_correlation",
    "beta_params",
    "load_portfolio_csv",
    "save_portfolio_csv",
    "homogeneous_portfolio",
    "load_scenario",
    "scenario_from_dict",
]

MODEL_NAMES = (
    "gaussian",
    "clayton",
    "survival_clayton",
    "gauss_clayton",
    "independent",
    "comonotone",
    "single_point",
)

DEFAULT_IRB_BOUNDS = (0.12, 0.24)
DEFAULT_CORR_SHIFT = 0.05


class ConfigError(ValueError):
    """Malformed portfolio CSV or scenario JSON."""


def irb_correlation(pd: float, lo_bound: float = 0.12, hi_bound: float = 0.24) -> float:
    """Regulatory asset correlation: exponential interpolation between bounds.

    Decreasing in the default probability; maps (0, 1) into
    (lo_bound, hi_bound).
    """
    if not (0.0 < pd < 1.0) or math.isnan(pd):
        raise ValueError(f"pd must lie in (0, 1), got {pd}")
    if not (0.0 < lo_bound < hi_bound < 1.0):
        raise ValueError(f"need 0 < lo_bound < hi_bound < 1, got ({lo_bound}, {hi_bound})")
    w = (1.0 - math.exp(-50.0 * pd)) / (1.0 - math.exp(-50.0))
    return lo_bound * w + hi_bound * (1.0 - w)


def beta_params(mean: float, vol: float) -> tuple[float, float]:
    """Moment-matched beta distribution parameters (a, b)."""
    if not (0.0 < mean < 1.0):
        raise ValueError(f"mean must lie in (0, 1), got {mean}")
    if not vol > 0.0:
        raise ValueError(f"vol must be positive, got {vol}")
    if vol * vol >= mean * (1.0 - mean):
        raise ValueError(
            f"infeasible beta moments: vol^2 = {vol * vol:.6g} must be below "
            f"mean*(1-mean) = {mean * (1.0 - mean):.6g}"
        )
    k = mean * (1.0 - mean) / (vol * vol) - 1.0
    return mean * k, (1.0 - mean) * k


@dataclass(frozen=True)
class DeterministicLgd:
    """Fixed loss given default in (0, 1]."""

    value: float

    def __post_init__(self):
        if not (0.0 < self.value <= 1.0):
            raise ValueError(f"deterministic LGD must lie in (0, 1], got {self.value}")

    @property
    def mean(self) -> float:
        return self.value

    def draw(self, rng, size: int):
        import numpy as np

        return np.full(size, self.value)


@dataclass(frozen=True)
class BetaLgd:
    """Beta-distributed loss given default, moment-parameterized."""

    mean_: float
    vol: float

    def __post_init__(self):
        beta_params(self.mean_, self.vol)  # validates feasibility

    @property
    def mean(self) -> float:
        return self.mean_

    @property
    def shape(self) -> tuple[float, float]:
        return beta_params(self.mean_, self.vol)

    def draw(self, rng, size: int):
        a, b = self.shape
        return rng.beta(a, b, size)


@dataclass(frozen=True)
class Borrower:
    """One obligor with its uncertainty intervals resolved.

    ``corr_interval`` bounds the asset correlation, ``corr_point`` is its
    point estimate (regulatory interpolation unless stated otherwise) and
    the theta values are the Clayton parameters matching those correlations
    by Kendall's tau.
    """

    name: str
    pd: float
    exposure_weight: float
    lgd: DeterministicLgd | BetaLgd
    corr_interval: tuple[float, float]
    corr_point: float
    theta_interval: tuple[float, float] = field(init=False)
    theta_point: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.pd < 1.0):
            raise ValueError(f"borrower {self.name!r}: pd must lie in (0, 1), got {self.pd}")
        if self.exposure_weight < 0.0:
            raise ValueError(f"borrower {self.name!r}: negative exposure weight")
        lo, hi = self.corr_interval
        if not (0.0 < lo <= hi < 1.0):
            raise ValueError(
                f"borrower {self.name!r}: correlation interval must satisfy 0 < lo <= hi < 1"
            )
        if not (0.0 < self.corr_point < 1.0):
            raise ValueError(f"borrower {self.name!r}: corr_point must lie in (0, 1)")
        object.__setattr__(
            self,
            "theta_interval",
            (clayton_theta_matching_gaussian(lo), clayton_theta_matching_gaussian(hi)),
        )
        object.__setattr__(self, "theta_point", clayton_theta_matching_gaussian(self.corr_point))


def _clamped_pd(raw: float, where: str) -> float:
    if raw >= 1.0:
        warnings.warn(f"{where}: pd = {raw:g} clamped to 1 - 1e-9", stacklevel=3)
        return 1.0 - 1e-9
    return raw


def _require_weight_sum(borrowers: list[Borrower]) -> None:
    total = sum(b.exposure_weight for b in borrowers)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"exposure weights sum to {total!r}, expected 1")


def homogeneous_portfolio(
    n: int,
    pd: float,
    lgd: DeterministicLgd | BetaLgd,
    corr_interval: tuple[float, float] | None = None,
    irb_bounds: tuple[float, float] = DEFAULT_IRB_BOUNDS,
) -> list[Borrower]:
    """n identical borrowers with equal exposure weights 1/n.

    Without an explicit ``corr_interval`` the regulatory bounds themselves
    serve as the uncertainty interval; the point estimate always comes from
    the interpolation formula.
    """
    if n < 1:
        raise ValueError("portfolio needs at least one borrower")
    point = irb_correlation(pd, *irb_bounds)
    interval = tuple(corr_interval) if corr_interval is not None else tuple(irb_bounds)
    borrower = Borrower(
        name="loan",
        pd=pd,
        exposure_weight=1.0 / n,
        lgd=lgd,
        corr_interval=interval,
        corr_point=point,
    )
    return [
        Borrower(
            name=f"loan{i + 1:04d}",
            pd=borrower.pd,
            exposure_weight=borrower.exposure_weight,
            lgd=borrower.lgd,
            corr_interval=borrower.corr_interval,
            corr_point=borrower.corr_point,
        )
        for i in range(n)
    ]


_CSV_COLUMNS = ("name", "amount", "pd", "lgd_kind", "lgd_mean", "lgd_vol", "corr_lo", "corr_hi")


def _parse_float(row_no: int, column: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"row {row_no}, column {column!r}: cannot parse {text!r} as a number") from None


def _parse_lgd(row_no: int, kind: str, mean_text: str, vol_text: str):
    kind = kind.strip().lower()
    if kind == "deterministic":
        return DeterministicLgd(_parse_float(row_no, "lgd_mean", mean_text))
    if kind == "beta":
        return BetaLgd(
            _parse_float(row_no, "lgd_mean", mean_text),
            _parse_float(row_no, "lgd_vol", vol_text),
        )
    raise ConfigError(f"row {row_no}, column 'lgd_kind': unknown kind {kind!r}")


def load_portfolio_csv(
    path,
    irb_bounds: tuple[float, float] = DEFAULT_IRB_BOUNDS,
    corr_shift: float = DEFAULT_CORR_SHIFT,
    lgd_override: DeterministicLgd | BetaLgd | None = None,
) -> list[Borrower]:
    """Read borrowers from CSV and normalize amounts to exposure weights.

    Correlation intervals are read from ``corr_lo``/``corr_hi`` when given
    and otherwise default to the regulatory interpolation with the supplied
    bounds shifted by plus/minus ``corr_shift``.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"portfolio file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ConfigError(f"{path}: missing header row")
        for required in ("name", "amount", "pd"):
            if required not in reader.fieldnames:
                raise ConfigError(f"{path}: missing required column {required!r}")
        rows = list(reader)
    if not rows:
        raise ConfigError(f"{path}: no borrower rows")

    amounts = []
    for i, row in enumerate(rows, start=2):  # header is line 1
        amount = _parse_float(i, "amount", row["amount"])
        if amount < 0.0:
            raise ConfigError(f"row {i}, column 'amount': negative amount {amount!r}")
        amounts.append(amount)
    total = sum(amounts)
    if total <= 0.0:
        raise ConfigError(f"{path}: total amount must be positive")
    if abs(total - 1.0) <= 1e-9:
        total = 1.0  # already normalized (e.g. a file we wrote ourselves): keep weights bit-exact

    borrowers = []
    for i, (row, amount) in enumerate(zip(rows, amounts), start=2):
        raw_pd = _parse_float(i, "pd", row["pd"])
        if raw_pd <= 0.0:
            raise ConfigError(f"row {i}, column 'pd': pd must be positive, got {raw_pd!r}")
        pd = _clamped_pd(raw_pd, f"row {i} ({row['name']})")
        point = irb_correlation(pd, *irb_bounds)
        if row.get("corr_lo", "").strip() and row.get("corr_hi", "").strip():
            corr = (
                _parse_float(i, "corr_lo", row["corr_lo"]),
                _parse_float(i, "corr_hi", row["corr_hi"]),
            )
        else:
            corr = (point - corr_shift, point + corr_shift)
        if lgd_override is not None:
            lgd = lgd_override
        elif row.get("lgd_kind", "").strip():
            lgd = _parse_lgd(i, row["lgd_kind"], row.get("lgd_mean", ""), row.get("lgd_vol", ""))
        else:
            raise ConfigError(f"row {i}, column 'lgd_kind': missing (and no override given)")
        borrowers.append(
            Borrower(
                name=row["name"].strip(),
                pd=pd,
                exposure_weight=amount if total == 1.0 else amount / total,
                lgd=lgd,
                corr_interval=corr,
                corr_point=point,
            )
        )
    _require_weight_sum(borrowers)
    return borrowers


def save_portfolio_csv(path, borrowers: list[Borrower]) -> None:
    """Write borrowers back out in the loader's schema (weights as amounts)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for b in borrowers:
            if isinstance(b.lgd, DeterministicLgd):
                lgd_kind, lgd_mean, lgd_vol = "deterministic", b.lgd.value, ""
            else:
                lgd_kind, lgd_mean, lgd_vol = "beta", b.lgd.mean_, b.lgd.vol
            writer.writerow(
                [
                    b.name,
                    repr(b.exposure_weight),
                    repr(b.pd),
                    lgd_kind,
                    repr(lgd_mean) if lgd_mean != "" else "",
                    repr(lgd_vol) if lgd_vol != "" else "",
                    repr(b.corr_interval[0]),
                    repr(b.corr_interval[1]),
                ]
            )


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo run configuration."""

    samples: int
    seed: int
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be at least 1, got {self.samples}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class Scenario:
    """A portfolio, the model families to bound, confidence levels and MC setup."""

    label: str
    borrowers: tuple[Borrower, ...]
    models: tuple[str, ...]
    alphas: tuple[float, ...]
    mc: McConfig
    point_copulas: tuple | None = None  # per-borrower copulas for 'single_point'

    def __post_init__(self):
        if not self.borrowers:
            raise ValueError("scenario needs at least one borrower")
        for m in self.models:
            if m not in MODEL_NAMES:
                raise ValueError(f"unknown model {m!r}; expected one of {MODEL_NAMES}")
        for a in self.alphas:
            if not (0.0 < a < 1.0):
                raise ValueError(f"confidence levels must lie in (0, 1), got {a}")
        if "single_point" in self.models:
            if self.point_copulas is None or len(self.point_copulas) != len(self.borrowers):
                raise ValueError("'single_point' model needs one copula per borrower")


def _lgd_from_dict(obj: dict, where: str):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{where}: lgd must be an object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "deterministic":
            return DeterministicLgd(float(obj["value"]))
        if kind == "beta":
            return BetaLgd(float(obj["mean"]), float(obj["vol"]))
    except KeyError as exc:
        raise ConfigError(f"{where}: lgd is missing field {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown lgd kind {kind!r}")


def _copula_from_dict(obj: dict, where: str):
    from . import copulas as cop

    if not isinstance(obj, dict) or "family" not in obj:
        raise ConfigError(f"{where}: copula must be an object with a 'family' field")
    family = obj["family"]
    try:
        if family == "independence":
            return cop.Independence()
        if family == "comonotone":
            return cop.Comonotone()
        if family == "gaussian":
            return cop.Gaussian(float(obj["param"]))
        if family == "clayton":
            return cop.Clayton(float(obj["param"]))
        if family == "survival_clayton":
            return cop.SurvivalClayton(float(obj["param"]))
    except KeyError:
        raise ConfigError(f"{where}: copula family {family!r} needs a 'param' field") from None
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown copula family {family!r}")


def _portfolio_from_dict(obj: dict, base_dir: Path) -> list[Borrower]:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("scenario field 'portfolio': must be an object with a 'kind' field")
    kind = obj["kind"]
    lgd = _lgd_from_dict(obj["lgd"], "portfolio.lgd") if "lgd" in obj else None
    irb_bounds = tuple(obj.get("irb_bounds", DEFAULT_IRB_BOUNDS))
    if kind == "homogeneous":
        for req in ("n", "pd"):
            if req not in obj:
                raise ConfigError(f"portfolio: homogeneous portfolio needs field {req!r}")
        if lgd is None:
            raise ConfigError("portfolio: homogeneous portfolio needs field 'lgd'")
        corr = obj.get("corr_interval")
        try:
            return homogeneous_portfolio(
                int(obj["n"]),
                float(obj["pd"]),
                lgd,
                corr_interval=tuple(corr) if corr is not None else None,
                irb_bounds=irb_bounds,
            )
        except ValueError as exc:
            raise ConfigError(f"portfolio: {exc}") from None
    if kind == "csv":
        if "path" not in obj:
            raise ConfigError("portfolio: csv portfolio needs field 'path'")
        csv_path = Path(obj["path"])
        if not csv_path.is_absolute():
            csv_path = base_dir / csv_path
        try:
            return load_portfolio_csv(
                csv_path,
                irb_bounds=irb_bounds,
                corr_shift=float(obj.get("corr_shift", DEFAULT_CORR_SHIFT)),
                lgd_override=lgd,
            )
        except ValueError as exc:
            raise ConfigError(f"portfolio: {exc}") from None
    raise ConfigError(f"portfolio: unknown kind {kind!r}")


def scenario_from_dict(doc: dict, base_dir=".") -> Scenario:
    """Build a scenario from a parsed JSON document.

    ``model`` may be a single name or a list of names; relative portfolio
    paths resolve against ``base_dir``.
    """
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a JSON object")
    for req in ("portfolio", "mc"):
        if req not in doc:
            raise ConfigError(f"scenario is missing field {req!r}")
    models = doc.get("models", doc.get("model"))
    if models is None:
        raise ConfigError("scenario is missing field 'model' (or 'models')")
    if isinstance(models, str):
        models = [models]
    mc_doc = doc["mc"]
    for req in ("samples", "seed"):
        if not isinstance(mc_doc, dict) or req not in mc_doc:
            raise ConfigError(f"scenario field 'mc': missing field {req!r}")
    try:
        mc = McConfig(
            samples=int(mc_doc["samples"]),
            seed=int(mc_doc["seed"]),
            workers=int(mc_doc.get("workers", 1)),
        )
    except ValueError as exc:
        raise ConfigError(f"scenario field 'mc': {exc}") from None
    borrowers = _portfolio_from_dict(doc["portfolio"], Path(base_dir))
    point_copulas = None
    if "point_copulas" in doc:
        raw = doc["point_copulas"]
        if isinstance(raw, dict):
            raw = [raw] * len(borrowers)
        point_copulas = tuple(
            _copula_from_dict(o, f"point_copulas[{i}]") for i, o in enumerate(raw)
        )
    try:
        return Scenario(
            label=str(doc.get("label", "scenario")),
            borrowers=tuple(borrowers),
            models=tuple(models),
            alphas=tuple(float(a) for a in doc.get("alphas", (0.95, 0.99))),
            mc=mc,
            point_copulas=point_copulas,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path) -> Scenario:
    """Load a scenario JSON file; relative portfolio paths resolve beside it."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(doc, base_dir=path.parent)
