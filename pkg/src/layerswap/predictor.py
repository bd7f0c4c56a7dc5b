"""Linear latency prediction from one calibration measurement.

Pinning one more middle layer of the dominant module always removes the
same per-inference transfer time, so end-to-end latency is affine in the
resident count k:

    predicted_s(k) = intercept_s - k * slope_ms / 1000

The slope comes entirely from profiling data (the module's middle-position
benefit times its layer size); only the intercept needs a measurement of
the full-offload system. When no measurement is available the simulator's
full-offload total stands in, and reports record which source was used.

`validate` compares predictions against a measured sweep and additionally
fits the measured points by ordinary least squares as a diagnostic; the
fitted slope is reported as a positive seconds-per-layer decrease.
"""

import csv
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import analytic
from .analytic import Position
from .dfbsim import Placement, SimConfig, simulated_total
from .profile import ModelProfile, ModuleProfile


@dataclass(frozen=True)
class Prediction:
    k: int
    predicted_s: float
    vram_total_mb: float | None = None


@dataclass(frozen=True)
class ValidationRow:
    k: int
    predicted_s: float
    measured_s: float
    error_pct: float  # (predicted - measured) / measured * 100


@dataclass(frozen=True)
class ValidationReport:
    rows: tuple[ValidationRow, ...]
    max_abs_error_pct: float
    fitted_slope_s: float | None  # positive per-layer decrease; None if < 2 rows


def slope_from_profile(module: ModuleProfile) -> float:
    """ms saved per additional resident layer: the middle-position delta.

    Zero for a module whose middle layers carry no benefit (all transfers
    already hidden); prediction is degenerate there and the curve is flat.
    """
    return analytic.residency_benefit(module, Position.MIDDLE).delta_ms


def predict(
    intercept_s: float, slope_ms_per_layer: float, k_values: Iterable[int]
) -> list[Prediction]:
    if not intercept_s > 0:
        raise ValueError("intercept_s must be > 0")
    out = []
    for k in k_values:
        if k < 0:
            raise ValueError("resident counts must be >= 0")
        out.append(Prediction(k=k, predicted_s=intercept_s - k * slope_ms_per_layer / 1000.0))
    return out


def validate(
    predictions: Sequence[Prediction], measured: Sequence[tuple[int, float]]
) -> ValidationReport:
    """Per-configuration prediction error against a measured sweep."""
    predicted_by_k = {pr.k: pr.predicted_s for pr in predictions}
    measured_by_k = dict(measured)
    if set(predicted_by_k) != set(measured_by_k):
        raise ValueError(
            f"measured k values {sorted(measured_by_k)} do not match "
            f"predicted k values {sorted(predicted_by_k)}"
        )
    rows = []
    for k in sorted(predicted_by_k):
        meas = measured_by_k[k]
        if not meas > 0:
            raise ValueError(f"measured time for k={k} must be > 0")
        pred = predicted_by_k[k]
        rows.append(ValidationRow(
            k=k, predicted_s=pred, measured_s=meas,
            error_pct=(pred - meas) / meas * 100.0,
        ))
    fitted = None
    if len(rows) >= 2:
        fit = statistics.linear_regression([r.k for r in rows], [r.measured_s for r in rows])
        fitted = -fit.slope
    return ValidationReport(
        rows=tuple(rows),
        max_abs_error_pct=max(abs(r.error_pct) for r in rows),
        fitted_slope_s=fitted,
    )


def resolve_intercept(p: ModelProfile, config: SimConfig = SimConfig()) -> tuple[float, str]:
    """Calibrated intercept and its source: the profile's measured
    full-offload time when present, else the simulator's."""
    if p.calibration_total_s is not None:
        return p.calibration_total_s, "measured"
    return simulated_total(p, Placement.empty(), config) / 1000.0, "simulated"


MEASURED_HEADER = ["k", "measured_s"]


def read_measured_sweep(path: str | Path) -> list[tuple[int, float]]:
    """Parse a measured sweep file: CSV with header `k,measured_s`."""
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"measured sweep file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"measured sweep file is empty: {path}") from None
        if [h.strip() for h in header] != MEASURED_HEADER:
            raise ValueError(
                f"measured sweep file must start with header 'k,measured_s', got {header}"
            )
        out = []
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ValueError(f"bad measured sweep row: {row}")
            try:
                out.append((int(row[0]), float(row[1])))
            except ValueError:
                raise ValueError(f"bad measured sweep row: {row}") from None
    return out
