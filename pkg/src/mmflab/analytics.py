"""Statistical reduction of sweep records.

Per-cell means and spreads of the return Hurst index, Pearson correlations
against each order-flow parameter, and OLS fits of the linear and cubic
response surfaces.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

VARIABLES = ("alpha_x", "hurst_x", "hurst_s")
SIGNIFICANCE = 0.001

FORMS: dict[str, tuple[str, ...]] = {
    "linear2": ("hurst_x", "hurst_s"),
    "cubicS2": ("hurst_x", "hurst_s", "hurst_s^2", "hurst_s^3"),
    "linear3": ("alpha_x", "hurst_x", "hurst_s"),
    "cubicS3": ("alpha_x", "hurst_x", "hurst_s", "hurst_s^2", "hurst_s^3"),
}


class InsufficientReps(ValueError):
    pass


class DegenerateVariance(ValueError):
    pass


class RankDeficient(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class VariableNotInModel(KeyError):
    pass


@dataclass(frozen=True)
class SweepRecord:
    alpha_x: float
    hurst_x: float
    hurst_s: float
    rep: int
    hurst_r: float
    r2: float
    seed: int
    runtime_ms: int = 0
    status: str = "ok"
    kept: int = 0

    @property
    def cell(self) -> tuple[float, float, float]:
        return (self.alpha_x, self.hurst_x, self.hurst_s)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class CellStat:
    mean: float
    std: float
    n: int

    def formatted(self) -> str:
        return format_cell(self.mean, self.std)


def format_cell(mean: float, std: float) -> str:
    """Table layout: ``0.46(1)`` with the std multiplied by 100."""
    return f"{mean:.2f}({int(round(std * 100))})"


def valid(records) -> list[SweepRecord]:
    return [r for r in records if r.ok and np.isfinite(r.hurst_r)]


def cell_stats(records) -> dict[tuple[float, float, float], CellStat]:
    groups: dict[tuple, list[float]] = defaultdict(list)
    for r in valid(records):
        groups[r.cell].append(r.hurst_r)
    out = {}
    for cell in sorted(groups):
        vals = np.asarray(groups[cell])
        if vals.size < 2:
            raise InsufficientReps(f"cell {cell} has {vals.size} repetition(s), need 2")
        out[cell] = CellStat(float(vals.mean()), float(vals.std(ddof=1)), int(vals.size))
    return out


def hurst_table(stats_by_cell, alpha_x: float):
    """Rows are H_s, columns H_x, at fixed alpha_x."""
    cells = {k: v for k, v in stats_by_cell.items() if np.isclose(k[0], alpha_x)}
    hx = sorted({k[1] for k in cells})
    hs = sorted({k[2] for k in cells})
    grid = [[cells.get((alpha_x, x, s)) for x in hx] for s in hs]
    return hs, hx, grid


def _column(records, variable: str) -> np.ndarray:
    if variable not in VARIABLES:
        raise ValueError(f"unknown variable {variable!r}")
    return np.array([getattr(r, variable) for r in records], dtype=float)


def pearson(records, variable: str) -> tuple[float, float]:
    """Pooled Pearson rho(H_r, variable) and its two-sided t-test p-value."""
    recs = valid(records)
    if len(recs) < 3:
        raise InsufficientData("need at least 3 records")
    x = _column(recs, variable)
    y = np.array([r.hurst_r for r in recs])
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateVariance(f"zero variance in {variable} or hurst_r")
    xc = x - x.mean()
    yc = y - y.mean()
    rho = float(np.clip(xc @ yc / np.sqrt((xc @ xc) * (yc @ yc)), -1.0, 1.0))
    n = len(recs)
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, float(2.0 * stats.t.sf(abs(t), n - 2))


@dataclass
class RegressionReport:
    form: str
    names: tuple[str, ...]
    coefficients: dict[str, float]
    std_errors: dict[str, float]
    p_values: dict[str, float]
    r2: float
    adjusted_r2: float
    n: int
    mode: str = "runs"
    meta: dict = field(default_factory=dict)

    def significant(self, level: float = SIGNIFICANCE) -> dict[str, bool]:
        return {k: p < level for k, p in self.p_values.items()}

    def predict(self, alpha_x: float = 0.0, hurst_x: float = 0.0, hurst_s: float = 0.0) -> float:
        row = _design_row({"alpha_x": alpha_x, "hurst_x": hurst_x, "hurst_s": hurst_s}, self.form)
        beta = np.array([self.coefficients[k] for k in ("intercept",) + self.names])
        return float(row @ beta)

    def to_dict(self) -> dict:
        return asdict(self)


def _design_row(v: dict, form: str) -> np.ndarray:
    cols = [1.0]
    for name in FORMS[form]:
        if name == "hurst_s^2":
            cols.append(v["hurst_s"] ** 2)
        elif name == "hurst_s^3":
            cols.append(v["hurst_s"] ** 3)
        else:
            cols.append(v[name])
    return np.array(cols)


def _cell_mean_records(records) -> list[SweepRecord]:
    return [
        SweepRecord(*cell, rep=0, hurst_r=s.mean, r2=float("nan"), seed=0)
        for cell, s in cell_stats(records).items()
    ]


def ols(records, form: str, mode: str = "runs", alpha_x: float | None = None) -> RegressionReport:
    """OLS with intercept for one of the response-surface forms.

    ``mode='runs'`` fits every run record; ``mode='cell_means'`` fits one
    point per parameter cell. ``alpha_x`` restricts the fit to one tail
    index (the two-variable forms are meant for a fixed alpha_x).
    """
    if form not in FORMS:
        raise ValueError(f"unknown form {form!r}; choose from {sorted(FORMS)}")
    recs = valid(records)
    if alpha_x is not None:
        recs = [r for r in recs if np.isclose(r.alpha_x, alpha_x)]
    if mode == "cell_means":
        recs = _cell_mean_records(recs)
    elif mode != "runs":
        raise ValueError(f"unknown mode {mode!r}")

    names = FORMS[form]
    p = len(names) + 1
    n = len(recs)
    if n < p + 10:
        raise InsufficientData(f"{n} records for {p} parameters; need at least {p + 10}")
    for var in {"alpha_x", "hurst_x", "hurst_s"} & set(names):
        if len({getattr(r, var) for r in recs}) < 2:
            raise RankDeficient(f"{var} takes a single value")

    X = np.array([_design_row(asdict(r), form) for r in recs])
    y = np.array([r.hurst_r for r in recs])
    if np.linalg.matrix_rank(X) < p:
        raise RankDeficient(f"design matrix for {form} is rank deficient")

    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = n - p
    ss_res = float(resid @ resid)
    yc = y - y.mean()
    ss_tot = float(yc @ yc)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / dof

    sigma2 = ss_res / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(se > 0, beta / se, np.inf)
    pvals = 2.0 * stats.t.sf(np.abs(tvals), dof)

    keys = ("intercept",) + names
    return RegressionReport(
        form=form,
        names=names,
        coefficients=dict(zip(keys, map(float, beta))),
        std_errors=dict(zip(keys, map(float, se))),
        p_values=dict(zip(keys, map(float, pvals))),
        r2=r2,
        adjusted_r2=adj,
        n=n,
        mode=mode,
        meta={"alpha_x": alpha_x},
    )


def sensitivity(report: RegressionReport, variable: str, delta: float) -> float:
    """Change in H_r for a change ``delta`` in one regressor, others fixed."""
    if report.form not in ("linear2", "linear3"):
        raise ValueError("sensitivity needs a linear form")
    if variable not in report.names:
        raise VariableNotInModel(variable)
    return report.coefficients[variable] * delta
