"""Power-law fitting of entropy distributions and fit-family comparison.

The power fit ``y = a * x^b`` is obtained by ordinary least squares on
(log x, log y), which is closed-form and seed-free.  Goodness-of-fit
diagnostics are always evaluated in the original linear domain so that
competing families are compared on the same footing.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence, TextIO

FIT_FAMILIES = ("power", "linear", "quadratic", "exponential")

FIT_REPORT_COLUMNS = ("family", "a_or_coeffs", "sse", "r_square", "adjusted_r_square", "rmse")

# Relative rmse level treated as an exact fit when ranking families.
_EXACT_FIT_RTOL = 1e-9


class DegenerateFitError(ValueError):
    """Raised when the sample is too small or leaves the fit's domain."""


@dataclass(frozen=True)
class FitDiagnostics:
    """Linear-domain goodness of fit: rmse is sqrt(sse / n)."""

    sse: float
    r_square: float
    adjusted_r_square: float
    rmse: float


@dataclass(frozen=True)
class PowerFit:
    a: float
    b: float
    s_score: float
    diagnostics: FitDiagnostics

    def predict(self, index: float) -> float:
        return self.a * index ** self.b


def _check_inputs(values: Sequence[float], indices: Sequence[float], minimum: int) -> None:
    if len(values) != len(indices):
        raise DegenerateFitError("values and indices must have equal length")
    if len(values) < minimum:
        raise DegenerateFitError(f"need at least {minimum} points, got {len(values)}")
    if any(v <= 0 for v in values):
        raise DegenerateFitError("values must be positive")
    if any(x <= 0 for x in indices):
        raise DegenerateFitError("indices must be positive")
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise DegenerateFitError("indices must be strictly increasing")


def _ols(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and intercept."""
    n = len(x)
    xm = sum(x) / n
    ym = sum(y) / n
    sxx = sum((xi - xm) ** 2 for xi in x)
    sxy = sum((xi - xm) * (yi - ym) for xi, yi in zip(x, y))
    slope = sxy / sxx
    return slope, ym - slope * xm


def _diagnostics(values: Sequence[float], predictions: Sequence[float], n_params: int) -> FitDiagnostics:
    n = len(values)
    sse = sum((v - p) ** 2 for v, p in zip(values, predictions))
    mean = sum(values) / n
    tss = sum((v - mean) ** 2 for v in values)
    if tss > 0.0:
        r_square = 1.0 - sse / tss
    else:
        # Constant data: any residual at float-noise level is a perfect fit.
        noise = n * (1e-12 * max(1.0, abs(mean))) ** 2
        r_square = 1.0 if sse <= noise else 0.0
    if n > n_params:
        adjusted = 1.0 - (1.0 - r_square) * (n - 1) / (n - n_params)
    else:
        adjusted = r_square
    return FitDiagnostics(
        sse=sse, r_square=r_square, adjusted_r_square=adjusted, rmse=math.sqrt(sse / n)
    )


def fit_power(values: Sequence[float], indices: Sequence[float] | None = None) -> PowerFit:
    """Fit ``y = a * x^b`` by log-log least squares; score is S = a - b."""
    if indices is None:
        indices = list(range(1, len(values) + 1))
    _check_inputs(values, indices, minimum=2)
    log_x = [math.log(x) for x in indices]
    log_y = [math.log(v) for v in values]
    b, intercept = _ols(log_x, log_y)
    a = math.exp(intercept)
    predictions = [a * x ** b for x in indices]
    return PowerFit(a=a, b=b, s_score=a - b, diagnostics=_diagnostics(values, predictions, 2))


def log_domain_r_square(values: Sequence[float], indices: Sequence[float] | None = None) -> float:
    """Coefficient of determination of the log-log regression itself."""
    if indices is None:
        indices = list(range(1, len(values) + 1))
    _check_inputs(values, indices, minimum=2)
    log_x = [math.log(x) for x in indices]
    log_y = [math.log(v) for v in values]
    b, intercept = _ols(log_x, log_y)
    sse = sum((yi - (intercept + b * xi)) ** 2 for xi, yi in zip(log_x, log_y))
    mean = sum(log_y) / len(log_y)
    tss = sum((yi - mean) ** 2 for yi in log_y)
    if tss <= 0.0:
        return 1.0 if sse == 0.0 else 0.0
    return 1.0 - sse / tss


@dataclass(frozen=True)
class FamilyFit:
    """One family's least-squares fit with linear-domain diagnostics."""

    family: str
    coefficients: tuple[float, ...]
    diagnostics: FitDiagnostics


def _polyfit(x: Sequence[float], y: Sequence[float], degree: int) -> list[float]:
    """Least-squares polynomial coefficients, low order first (normal equations)."""
    n = degree + 1
    # Gram matrix of monomials and moment vector.
    g = [[sum(xi ** (i + j) for xi in x) for j in range(n)] for i in range(n)]
    m = [sum(yi * xi ** i for xi, yi in zip(x, y)) for i in range(n)]
    # Gaussian elimination with partial pivoting; systems here are tiny.
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(g[r][col]))
        g[col], g[pivot] = g[pivot], g[col]
        m[col], m[pivot] = m[pivot], m[col]
        for row in range(col + 1, n):
            factor = g[row][col] / g[col][col]
            for j in range(col, n):
                g[row][j] -= factor * g[col][j]
            m[row] -= factor * m[col]
    coeffs = [0.0] * n
    for row in range(n - 1, -1, -1):
        acc = m[row] - sum(g[row][j] * coeffs[j] for j in range(row + 1, n))
        coeffs[row] = acc / g[row][row]
    return coeffs


def _polyval(coeffs: Sequence[float], x: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def fit_compare(values: Sequence[float], indices: Sequence[float] | None = None) -> list[FamilyFit]:
    """Fit all four families and rank them by rmse, best first.

    Linear and quadratic are direct polynomial regressions; the exponential
    is a log-linear regression of log value on index; power is ``fit_power``.
    Near-exact fits are tied and broken by parameter count so that the
    generating family of noise-free data wins.
    """
    if indices is None:
        indices = list(range(1, len(values) + 1))
    _check_inputs(values, indices, minimum=4)
    fits: list[FamilyFit] = []

    power = fit_power(values, indices)
    fits.append(FamilyFit("power", (power.a, power.b), power.diagnostics))

    lin = _polyfit(indices, values, 1)
    fits.append(FamilyFit(
        "linear", tuple(lin),
        _diagnostics(values, [_polyval(lin, x) for x in indices], 2),
    ))

    quad = _polyfit(indices, values, 2)
    fits.append(FamilyFit(
        "quadratic", tuple(quad),
        _diagnostics(values, [_polyval(quad, x) for x in indices], 3),
    ))

    slope, intercept = _ols(indices, [math.log(v) for v in values])
    ea = math.exp(intercept)
    fits.append(FamilyFit(
        "exponential", (ea, slope),
        _diagnostics(values, [ea * math.exp(slope * x) for x in indices], 2),
    ))

    scale = sum(abs(v) for v in values) / len(values)
    threshold = _EXACT_FIT_RTOL * max(scale, 1.0)

    def key(fit: FamilyFit) -> tuple:
        rmse = 0.0 if fit.diagnostics.rmse < threshold else fit.diagnostics.rmse
        return (rmse, len(fit.coefficients), fit.family)

    return sorted(fits, key=key)


def ideal_entropy_targets(fit: PowerFit, num_stages: int) -> list[float]:
    """Entropy profile a perfectly power-distributed network would exhibit."""
    if num_stages < 1:
        raise ValueError("num_stages must be >= 1")
    if fit.a <= 0:
        raise ValueError("fit amplitude must be positive")
    return [fit.a * m ** fit.b for m in range(1, num_stages + 1)]


def write_fit_report(stream: TextIO, ranked: Sequence[FamilyFit]) -> None:
    """Fit report CSV, one row per family, already sorted by rmse."""
    writer = csv.DictWriter(stream, fieldnames=FIT_REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for fit in ranked:
        writer.writerow({
            "family": fit.family,
            "a_or_coeffs": ";".join(repr(c) for c in fit.coefficients),
            "sse": repr(fit.diagnostics.sse),
            "r_square": repr(fit.diagnostics.r_square),
            "adjusted_r_square": repr(fit.diagnostics.adjusted_r_square),
            "rmse": repr(fit.diagnostics.rmse),
        })
