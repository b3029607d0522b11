"""Fitting pipeline: raw selection trials to a width-parameterized model.

Stages mirror the original analysis: screen outliers per participant and
condition with a single-pass 3-standard-deviation rule, estimate per-cell
Gaussian parameters by maximum likelihood, average cells into per-condition
points, regress the parameters on width (optionally adding a movement
amplitude regressor), and validate the result against observed success
rates with MAE, R-squared, AIC and leave-one-condition-out cross-validation.

Sigma estimates deliberately use the maximum-likelihood (divide-by-n) form
throughout; with 20 trials per cell the difference from the sample standard
deviation is material, so the convention must stay consistent.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import kolmogorov, ndtr

from .integrate import sr_circle
from .model import (
    AmplitudeTerms,
    ModelConstants,
    ModelSpec,
    ModelVariant,
    distribution_params,
    model_to_document,
)

FIT_SCHEMA_VERSION = 1
METRICS_SCHEMA_VERSION = 1

#: Fitted-constant count per variant, used as k in the AIC penalty.
VARIANT_K = {
    ModelVariant.BASELINE: 6,
    ModelVariant.ZERO_OFFSET: 4,
    ModelVariant.WITH_AMPLITUDE: 9,
    ModelVariant.WORLD_COORDINATE: 6,
}

_SCREEN_SDS = 3.0


@dataclass(frozen=True)
class TrialRecord:
    """One raw pointing endpoint in angular coordinates around the goal."""

    participant: str
    w: float
    a: float
    x: float
    y: float
    movement_time: float | None = None
    success: bool | None = None

    def __post_init__(self) -> None:
        if not self.w > 0.0:
            raise ValueError(f"target width must be positive, got {self.w}")
        if not self.a > 0.0:
            raise ValueError(f"movement amplitude must be positive, got {self.a}")
        if self.movement_time is not None and not self.movement_time > 0.0:
            raise ValueError(f"movement time must be positive, got {self.movement_time}")


@dataclass(frozen=True)
class CellStats:
    """Gaussian parameter estimates for one participant-condition cell."""

    participant: str
    w: float
    a: float
    mu_x: float
    sigma_x: float
    mu_y: float
    sigma_y: float
    rho: float
    n: int
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    passed: bool
    n: int


@dataclass(frozen=True)
class KsCellReport:
    participant: str
    w: float
    a: float
    axis: str
    result: KsResult


@dataclass(frozen=True)
class Regression:
    slope: float
    intercept: float
    r_squared: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class FitResult:
    spec: ModelSpec
    regressions: dict[str, Regression]
    screened_out: int
    normality: tuple[KsCellReport, ...]


@dataclass(frozen=True)
class Condition:
    """One (width, amplitude) condition with its observed success rate."""

    w: float
    a: float
    observed_sr: float


@dataclass(frozen=True)
class ValidationMetrics:
    mae: float  # percentage points
    r_squared: float
    aic: float
    per_condition: tuple[dict, ...]
    loocv_mae: float | None = None
    loocv_r_squared: float | None = None


def _group_key(t: TrialRecord) -> tuple[str, float, float]:
    return (t.participant, t.w, t.a)


def _grouped(trials: list[TrialRecord]) -> dict[tuple, list[TrialRecord]]:
    groups: dict[tuple, list[TrialRecord]] = {}
    for t in trials:
        groups.setdefault(_group_key(t), []).append(t)
    return groups


# ---------------------------------------------------------------------------
# screening

def screen_outliers(
    trials: list[TrialRecord],
) -> tuple[list[TrialRecord], list[TrialRecord]]:
    """Single-pass 3-SD screening within each (participant, W, A) group.

    Group means and standard deviations are computed once on the raw group
    (outliers included); a trial is removed when its x, y or movement-time
    deviation exceeds 3 SD on that axis. Axes with zero spread never remove
    anything, and the movement-time axis is skipped for groups where any
    trial lacks a time.
    """
    groups = _grouped(trials)
    for key, group in groups.items():
        if len(group) < 2:
            raise ValueError(f"group {key} has fewer than 2 trials")

    keep_flags: dict[int, bool] = {}
    for group in groups.values():
        axes = [
            np.array([t.x for t in group]),
            np.array([t.y for t in group]),
        ]
        if all(t.movement_time is not None for t in group):
            axes.append(np.array([t.movement_time for t in group]))
        keep = np.ones(len(group), dtype=bool)
        for arr in axes:
            sd = arr.std(ddof=0)
            if sd > 0.0:
                keep &= np.abs(arr - arr.mean()) <= _SCREEN_SDS * sd
        for t, k in zip(group, keep):
            keep_flags[id(t)] = bool(k)

    kept = [t for t in trials if keep_flags[id(t)]]
    removed = [t for t in trials if not keep_flags[id(t)]]
    return kept, removed


# ---------------------------------------------------------------------------
# per-cell estimation

def mle_cell_stats(group: list[TrialRecord]) -> CellStats:
    """Maximum-likelihood Gaussian estimates (divide-by-n sigma) for a cell."""
    if len(group) < 2:
        raise ValueError("need at least 2 trials to estimate cell statistics")
    first = group[0]
    key = _group_key(first)
    if any(_group_key(t) != key for t in group):
        raise ValueError("cell statistics need trials from a single (participant, W, A) cell")

    x = np.array([t.x for t in group])
    y = np.array([t.y for t in group])
    sx = float(x.std(ddof=0))
    sy = float(y.std(ddof=0))
    flags: tuple[str, ...] = ()
    if sx == 0.0 or sy == 0.0:
        rho = 0.0
        flags = ("zero_variance",)
    else:
        rho = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
        rho = max(-1.0, min(1.0, rho))
    return CellStats(
        participant=first.participant, w=first.w, a=first.a,
        mu_x=float(x.mean()), sigma_x=sx,
        mu_y=float(y.mean()), sigma_y=sy,
        rho=rho, n=len(group), flags=flags,
    )


def ks_normality(sample, lilliefors: bool = False) -> KsResult:
    """One-sample KS test of normality with MLE-fitted mean and sigma.

    By default the p-value comes from the plain asymptotic KS distribution
    (matching the original analysis). ``lilliefors=True`` applies the
    Dallal-Wilkinson approximation that corrects for the estimated
    parameters; it is stricter and off by default.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 8:
        raise ValueError(f"need at least 8 observations, got {n}")
    m = float(x.mean())
    s = float(x.std(ddof=0))
    if s == 0.0:
        raise ValueError("degenerate sample: zero variance")
    cdf = ndtr((x - m) / s)
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - cdf))
    d_minus = float(np.max(cdf - (i - 1) / n))
    d = max(d_plus, d_minus)
    if lilliefors:
        p = _lilliefors_p(d, n)
    else:
        p = float(kolmogorov(d * math.sqrt(n)))
    p = min(1.0, max(0.0, p))
    return KsResult(statistic=d, p_value=p, passed=p >= 0.05, n=n)


def _lilliefors_p(d: float, n: int) -> float:
    # Dallal & Wilkinson (1986) approximation for the normal case.
    if n > 100:
        d = d * (n / 100.0) ** 0.49
        n = 100
    p = math.exp(
        -7.01256 * d * d * (n + 2.78019)
        + 2.99587 * d * math.sqrt(n + 2.78019)
        - 0.122119
        + 0.974598 / math.sqrt(n)
        + 1.67997 / n
    )
    return min(1.0, p)


# ---------------------------------------------------------------------------
# regression

def fit_linear(points) -> Regression:
    """Ordinary least squares of value on w for (w, value) pairs."""
    pts = [(float(w), float(v)) for w, v in points]
    if len(pts) < 2:
        raise ValueError("need at least 2 points")
    w = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    sxx = float(np.sum((w - w.mean()) ** 2))
    if sxx == 0.0:
        raise ValueError("all w values identical; cannot regress on w")
    slope = float(np.sum((w - w.mean()) * (v - v.mean())) / sxx)
    intercept = float(v.mean() - slope * w.mean())
    resid = v - (slope * w + intercept)
    rss = float(np.sum(resid**2))
    tss = float(np.sum((v - v.mean()) ** 2))
    if tss == 0.0:
        return Regression(slope, intercept, 0.0, flags=("constant_values",))
    r2 = 1.0 - rss / tss
    return Regression(slope, intercept, max(0.0, min(1.0, r2)))


def _fit_plane(w: np.ndarray, a: np.ndarray, v: np.ndarray) -> tuple[float, float, float, float]:
    """OLS of v on [w, a, 1]; returns (w_slope, a_slope, intercept, r_squared)."""
    design = np.column_stack([w, a, np.ones_like(w)])
    beta, *_ = np.linalg.lstsq(design, v, rcond=None)
    resid = v - design @ beta
    rss = float(np.sum(resid**2))
    tss = float(np.sum((v - v.mean()) ** 2))
    r2 = 0.0 if tss == 0.0 else max(0.0, min(1.0, 1.0 - rss / tss))
    return float(beta[0]), float(beta[1]), float(beta[2]), r2


# ---------------------------------------------------------------------------
# condition aggregation

@dataclass(frozen=True)
class ConditionStats:
    """Participant-averaged cell statistics plus the observed success rate."""

    w: float
    a: float
    mu_x: float
    sigma_x: float
    mu_y: float
    sigma_y: float
    rho: float
    n_cells: int
    observed_sr: float


def observed_sr(group: list[TrialRecord], w: float | None = None) -> float:
    """Observed success of a group: mean success flag when every trial has
    one, else the fraction of endpoints inside the disc of diameter ``w``."""
    if not group:
        raise ValueError("empty group")
    if all(t.success is not None for t in group):
        return float(np.mean([1.0 if t.success else 0.0 for t in group]))
    if w is None:
        w = group[0].w
    r = w / 2.0
    inside = [1.0 if t.x * t.x + t.y * t.y <= r * r else 0.0 for t in group]
    return float(np.mean(inside))


def condition_table(trials: list[TrialRecord]) -> list[ConditionStats]:
    """Screened, cell-estimated, participant-averaged condition summary."""
    kept, _ = screen_outliers(trials)
    return _aggregate(kept)


def _aggregate(kept: list[TrialRecord]) -> list[ConditionStats]:
    cells: dict[tuple, CellStats] = {}
    for key, group in _grouped(kept).items():
        if len(group) >= 2:
            cells[key] = mle_cell_stats(group)

    by_condition: dict[tuple[float, float], list[CellStats]] = {}
    cond_trials: dict[tuple[float, float], list[TrialRecord]] = {}
    for t in kept:
        cond_trials.setdefault((t.w, t.a), []).append(t)
    for st in cells.values():
        by_condition.setdefault((st.w, st.a), []).append(st)

    missing = sorted(set(cond_trials) - set(by_condition))
    if missing:
        raise ValueError(f"screening left no usable cells for conditions {missing}")

    out = []
    for (w, a) in sorted(by_condition):
        sts = by_condition[(w, a)]
        out.append(ConditionStats(
            w=w, a=a,
            mu_x=float(np.mean([s.mu_x for s in sts])),
            sigma_x=float(np.mean([s.sigma_x for s in sts])),
            mu_y=float(np.mean([s.mu_y for s in sts])),
            sigma_y=float(np.mean([s.sigma_y for s in sts])),
            rho=float(np.mean([s.rho for s in sts])),
            n_cells=len(sts),
            observed_sr=observed_sr(cond_trials[(w, a)], w),
        ))
    return out


def _regress_constants(
    table: list[ConditionStats], variant: ModelVariant
) -> tuple[ModelConstants, AmplitudeTerms | None, dict[str, Regression]]:
    w = np.array([c.w for c in table])
    a = np.array([c.a for c in table])
    if len(set(w.tolist())) < 3:
        raise ValueError("need at least 3 distinct width levels to fit")

    sig_x = np.array([c.sigma_x for c in table])
    sig_y = np.array([c.sigma_y for c in table])
    mu_x = np.array([c.mu_x for c in table])

    regs: dict[str, Regression] = {}
    amp = None
    if variant is ModelVariant.WITH_AMPLITUDE:
        ka, kg, kb, r2x = _fit_plane(w, a, sig_x)
        kc, kh, kd, r2y = _fit_plane(w, a, sig_y)
        ke, ki, kf, r2m = _fit_plane(w, a, mu_x)
        regs["sigma_x"] = Regression(ka, kb, r2x)
        regs["sigma_y"] = Regression(kc, kd, r2y)
        regs["mu_x"] = Regression(ke, kf, r2m)
        amp = AmplitudeTerms(sigma_x_slope=kg, sigma_y_slope=kh, mu_x_slope=ki)
        constants = ModelConstants(a=ka, b=kb, c=kc, d=kd, e=ke, f=kf)
        return constants, amp, regs

    rx = fit_linear(zip(w, sig_x))
    ry = fit_linear(zip(w, sig_y))
    regs["sigma_x"] = rx
    regs["sigma_y"] = ry
    if variant is ModelVariant.ZERO_OFFSET:
        e_, f_ = 0.0, 0.0
    else:
        rm = fit_linear(zip(w, mu_x))
        regs["mu_x"] = rm
        e_, f_ = rm.slope, rm.intercept
    constants = ModelConstants(
        a=rx.slope, b=rx.intercept, c=ry.slope, d=ry.intercept, e=e_, f=f_
    )
    return constants, amp, regs


def fit_model(trials: list[TrialRecord], variant: ModelVariant) -> FitResult:
    """Run the full pipeline and return the fitted model with diagnostics."""
    kept, removed = screen_outliers(trials)
    table = _aggregate(kept)
    constants, amp, regs = _regress_constants(table, variant)

    reports: list[KsCellReport] = []
    for key, group in sorted(_grouped(kept).items()):
        if len(group) < 8:
            continue
        for axis, vals in (("x", [t.x for t in group]), ("y", [t.y for t in group])):
            try:
                res = ks_normality(vals)
            except ValueError:
                continue  # degenerate cell; nothing to report
            reports.append(KsCellReport(
                participant=key[0], w=key[1], a=key[2], axis=axis, result=res,
            ))

    ws = [c.w for c in table]
    spec = ModelSpec(
        variant=variant,
        constants=constants,
        amplitude_constants=amp,
        validity_range=(min(ws), max(ws)),
    )
    return FitResult(
        spec=spec, regressions=regs, screened_out=len(removed),
        normality=tuple(reports),
    )


# ---------------------------------------------------------------------------
# validation

def predicted_sr(spec: ModelSpec, w: float, a: float | None = None) -> float:
    """Model success rate for a disc target of diameter ``w`` degrees."""
    amplitude = a if spec.variant is ModelVariant.WITH_AMPLITUDE else None
    params = distribution_params(w, spec, amplitude)
    return sr_circle(params, w).value


def _mae_r2(observed: np.ndarray, estimated: np.ndarray) -> tuple[float, float]:
    mae = float(np.mean(np.abs(observed - estimated))) * 100.0
    rss = float(np.sum((observed - estimated) ** 2))
    tss = float(np.sum((observed - observed.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0.0 else 0.0
    return mae, r2


def evaluate(spec: ModelSpec, conditions: list[Condition]) -> ValidationMetrics:
    """Compare model success rates to observed ones over conditions.

    MAE is reported in percentage points; AIC uses the least-squares form
    n*ln(RSS/n) + 2k on success-rate residuals (proportions), with k the
    number of fitted constants of the variant. Only AIC differences between
    variants on the same conditions are meaningful.
    """
    if len(conditions) < 3:
        raise ValueError(f"need at least 3 conditions, got {len(conditions)}")
    obs = np.array([c.observed_sr for c in conditions])
    est = np.array([predicted_sr(spec, c.w, c.a) for c in conditions])
    mae, r2 = _mae_r2(obs, est)
    n = len(conditions)
    rss = float(np.sum((obs - est) ** 2))
    k = VARIANT_K[spec.variant]
    aic = n * math.log(rss / n) + 2 * k if rss > 0.0 else -math.inf
    per_condition = tuple(
        {"w": c.w, "a": c.a, "observed_sr": c.observed_sr, "estimated_sr": float(e)}
        for c, e in zip(conditions, est)
    )
    return ValidationMetrics(mae=mae, r_squared=r2, aic=aic, per_condition=per_condition)


def loocv(trials: list[TrialRecord], variant: ModelVariant) -> dict:
    """Leave-one-condition-out cross-validation.

    Each fold refits the regressions on the remaining conditions'
    aggregated statistics and predicts the held-out condition's success
    rate. Folds whose refit fails are reported, not silently dropped.
    """
    table = condition_table(trials)
    if len(table) < 4:
        raise ValueError(f"need at least 4 conditions for LOOCV, got {len(table)}")
    obs, pred, folds = [], [], []
    for i, held in enumerate(table):
        rest = table[:i] + table[i + 1:]
        fold: dict = {"w": held.w, "a": held.a, "observed_sr": held.observed_sr}
        try:
            constants, amp, _ = _regress_constants(rest, variant)
            spec = ModelSpec(
                variant=variant, constants=constants, amplitude_constants=amp,
                validity_range=(min(c.w for c in rest), max(c.w for c in rest)),
            )
            p = predicted_sr(spec, held.w, held.a)
        except ValueError as exc:
            fold["error"] = str(exc)
            folds.append(fold)
            continue
        fold["predicted_sr"] = p
        folds.append(fold)
        obs.append(held.observed_sr)
        pred.append(p)
    if len(obs) < 2:
        raise ValueError("too few successful LOOCV folds")
    mae, r2 = _mae_r2(np.array(obs), np.array(pred))
    return {"mae": mae, "r_squared": r2, "folds": folds}


def validate_model(spec: ModelSpec, trials: list[TrialRecord]) -> ValidationMetrics:
    """Training metrics of ``spec`` on trials, plus LOOCV refits of the same
    variant on the same data."""
    table = condition_table(trials)
    conditions = [Condition(c.w, c.a, c.observed_sr) for c in table]
    base = evaluate(spec, conditions)
    cv = loocv(trials, spec.variant)
    return ValidationMetrics(
        mae=base.mae, r_squared=base.r_squared, aic=base.aic,
        per_condition=base.per_condition,
        loocv_mae=cv["mae"], loocv_r_squared=cv["r_squared"],
    )


# ---------------------------------------------------------------------------
# trials CSV

_CSV_COLUMNS = ["participant", "W_deg", "A_deg", "x_deg", "y_deg", "mt_ms"]


def read_trials_csv(source) -> list[TrialRecord]:
    """Read trials from CSV with header
    ``participant,W_deg,A_deg,x_deg,y_deg,mt_ms[,success]``."""
    if isinstance(source, (str, bytes)):
        text = source.decode() if isinstance(source, bytes) else source
        fh = io.StringIO(text)
    else:
        fh = source
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty trials CSV") from None
    header = [h.strip() for h in header]
    if header != _CSV_COLUMNS and header != _CSV_COLUMNS + ["success"]:
        raise ValueError(
            "trials CSV header must be "
            f"{','.join(_CSV_COLUMNS)}[,success]; got {','.join(header)}"
        )
    has_success = len(header) == 7

    trials = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            success = None
            if has_success and row[6].strip() != "":
                success = _parse_bool(row[6])
            trials.append(TrialRecord(
                participant=row[0].strip(),
                w=float(row[1]), a=float(row[2]),
                x=float(row[3]), y=float(row[4]),
                movement_time=float(row[5]) if row[5].strip() != "" else None,
                success=success,
            ))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return trials


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true"):
        return True
    if t in ("0", "false"):
        return False
    raise ValueError(f"invalid success flag {text!r}")


def write_trials_csv(trials: list[TrialRecord], fh) -> None:
    any_success = any(t.success is not None for t in trials)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS + (["success"] if any_success else []))
    for t in trials:
        row = [t.participant, repr(t.w), repr(t.a), repr(t.x), repr(t.y),
               "" if t.movement_time is None else repr(t.movement_time)]
        if any_success:
            row.append("" if t.success is None else ("1" if t.success else "0"))
        writer.writerow(row)


# ---------------------------------------------------------------------------
# JSON documents

def fit_result_to_document(result: FitResult) -> dict:
    return {
        "raysr_fit": FIT_SCHEMA_VERSION,
        "model": model_to_document(result.spec),
        "screened_out": result.screened_out,
        "regressions": {
            name: {
                "slope": reg.slope,
                "intercept": reg.intercept,
                "r_squared": reg.r_squared,
                **({"flags": list(reg.flags)} if reg.flags else {}),
            }
            for name, reg in sorted(result.regressions.items())
        },
        "normality": [
            {
                "participant": r.participant,
                "w_deg": r.w,
                "a_deg": r.a,
                "axis": r.axis,
                "statistic": r.result.statistic,
                "p_value": r.result.p_value,
                "passed": r.result.passed,
                "n": r.result.n,
            }
            for r in result.normality
        ],
    }


def metrics_to_document(metrics: ValidationMetrics) -> dict:
    doc = {
        "raysr_metrics": METRICS_SCHEMA_VERSION,
        "mae_pp": metrics.mae,
        "r_squared": metrics.r_squared,
        "aic": metrics.aic,
        "per_condition": [
            {
                "w_deg": pc["w"],
                "a_deg": pc["a"],
                "observed_sr": pc["observed_sr"],
                "estimated_sr": pc["estimated_sr"],
            }
            for pc in metrics.per_condition
        ],
    }
    if metrics.loocv_mae is not None:
        doc["loocv_mae_pp"] = metrics.loocv_mae
        doc["loocv_r_squared"] = metrics.loocv_r_squared
    return doc
