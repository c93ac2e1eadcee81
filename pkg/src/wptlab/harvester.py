"""Nonlinear energy-harvester models.

Two complementary models of the rectifier nonlinearity live here:

* a truncated-Taylor diode model whose figure of merit combines the second
  and fourth moments of the received signal (``z = k2*R*m2 + k4*R^2*m4``,
  a monotone proxy for the harvested DC power), and
* a curve-fit model, quadratic in the natural log of power in watts:
  ``ln(p_dc) = a*ln(p_rf)^2 + b*ln(p_rf) + c``, optionally with a sensitivity
  floor below which the rectifier harvests nothing.

The log-domain power unit is watts. The convention is not arbitrary: with
watts and natural logs, published coefficient sets for rectifiers of this
class give conversion efficiencies in the tens of percent at -20 dBm, which
is the physically observed magnitude. Do not silently rescale.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np

from .distributions import ModulationDist
from .errors import CsvFormatError, FitError, InvalidMomentsError, ParameterError
from .gains import g_mod, g_td, g_wf
from .units import dbm_to_watts

#: Relative slack applied to the Jensen check m4 >= m2^2, absorbing
#: floating-point noise from empirical moment estimators.
JENSEN_TOLERANCE = 1e-9


@dataclass(frozen=True)
class DiodeParams:
    """Shockley diode parameters: saturation current, ideality factor and
    thermal voltage. Defaults are typical for a low-barrier Schottky diode."""

    i_s: float = 5e-6
    n: float = 1.05
    v_t: float = 0.02586

    def __post_init__(self):
        if self.i_s <= 0:
            raise ParameterError(f"saturation current must be > 0, got {self.i_s}")
        if self.n < 1:
            raise ParameterError(f"ideality factor must be >= 1, got {self.n}")
        if self.v_t <= 0:
            raise ParameterError(f"thermal voltage must be > 0, got {self.v_t}")


@dataclass(frozen=True)
class TaylorDiodeModel:
    """Second/fourth-order Taylor coefficients of the diode law plus the
    antenna resistance entering the figure of merit."""

    k2: float
    k4: float
    r_ant: float

    def __post_init__(self):
        if self.k2 <= 0 or self.k4 <= 0:
            raise ParameterError("Taylor coefficients k2, k4 must be > 0")
        if self.r_ant <= 0:
            raise ParameterError(f"antenna resistance must be > 0, got {self.r_ant}")


@dataclass(frozen=True)
class LogPolyFitModel:
    """Quadratic-in-log harvester fit with validity range and optional floor.

    ``valid_range`` is the power span (in watts) of the data the fit was
    produced from; evaluation outside it is allowed but flagged as
    extrapolated. ``p_rf_min`` is the sensitivity floor in watts: below it the
    rectifier does not turn on and the model returns exactly 0.
    """

    a: float
    b: float
    c: float
    valid_range: Tuple[float, float]
    p_rf_min: Optional[float] = None
    degree: int = 2

    def __post_init__(self):
        lo, hi = self.valid_range
        if not (0 < lo <= hi):
            raise ParameterError(f"valid_range must satisfy 0 < lo <= hi, got {self.valid_range}")
        if self.p_rf_min is not None and self.p_rf_min < 0:
            raise ParameterError(f"p_rf_min must be >= 0, got {self.p_rf_min}")
        if self.degree not in (1, 2):
            raise ParameterError(f"degree must be 1 or 2, got {self.degree}")
        if self.degree == 1 and self.a != 0.0:
            raise ParameterError("degree-1 models must have a = 0")

    def log_poly(self, ln_p_rf):
        """ln(p_dc) predicted by the raw polynomial (no sensitivity floor)."""
        return self.a * ln_p_rf**2 + self.b * ln_p_rf + self.c

    def evaluate(self, p_rf):
        """Predicted DC power in watts; 0 below the sensitivity floor.

        Accepts a scalar or an array; the raw polynomial (floor ignored) is
        available via :meth:`log_poly`.
        """
        p = np.asarray(p_rf, dtype=float)
        if np.any(p <= 0):
            raise ParameterError("p_rf must be > 0")
        out = np.exp(self.log_poly(np.log(p)))
        if self.p_rf_min is not None:
            out = np.where(p < self.p_rf_min, 0.0, out)
        return float(out) if np.ndim(p_rf) == 0 else out

    def is_extrapolated(self, p_rf):
        """True where ``p_rf`` falls outside the fitted power range."""
        lo, hi = self.valid_range
        p = np.asarray(p_rf, dtype=float)
        out = (p < lo) | (p > hi)
        return bool(out) if np.ndim(p_rf) == 0 else out

    def with_floor(self, p_rf_min):
        """Copy of the model with the sensitivity floor replaced."""
        return replace(self, p_rf_min=p_rf_min)

    def to_dict(self):
        return {
            "degree": self.degree,
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "valid_range_w": [self.valid_range[0], self.valid_range[1]],
            "p_rf_min_w": self.p_rf_min,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            a=float(d["a"]),
            b=float(d["b"]),
            c=float(d["c"]),
            valid_range=(float(d["valid_range_w"][0]), float(d["valid_range_w"][1])),
            p_rf_min=None if d.get("p_rf_min_w") is None else float(d["p_rf_min_w"]),
            degree=int(d["degree"]),
        )

    def save_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class FitDataset:
    """Measured (p_rf, p_dc) pairs in watts, all strictly positive."""

    p_rf: np.ndarray
    p_dc: np.ndarray

    def __post_init__(self):
        p_rf = np.asarray(self.p_rf, dtype=float)
        p_dc = np.asarray(self.p_dc, dtype=float)
        object.__setattr__(self, "p_rf", p_rf)
        object.__setattr__(self, "p_dc", p_dc)
        if p_rf.shape != p_dc.shape or p_rf.ndim != 1:
            raise ParameterError("p_rf and p_dc must be 1-D arrays of equal length")
        if p_rf.size < 2:
            raise ParameterError("need at least 2 data points")
        if np.any(p_rf <= 0) or np.any(p_dc <= 0):
            raise ParameterError("all powers must be strictly positive (log-domain fit)")

    def __len__(self):
        return self.p_rf.size

    @classmethod
    def from_csv(cls, path):
        """Read a dataset from CSV with header ``prf_dbm,pdc_dbm`` or
        ``prf_w,pdc_w``; the header determines the units."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise CsvFormatError("empty file", line=1) from None
            header = [h.strip().lower() for h in header]
            if header == ["prf_dbm", "pdc_dbm"]:
                convert = dbm_to_watts
            elif header == ["prf_w", "pdc_w"]:
                convert = float
            else:
                raise CsvFormatError(
                    f"expected header 'prf_dbm,pdc_dbm' or 'prf_w,pdc_w', got {','.join(header)}",
                    line=1,
                )
            p_rf, p_dc = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise CsvFormatError(f"expected 2 columns, got {len(row)}", line=lineno)
                try:
                    p_rf.append(convert(float(row[0])))
                    p_dc.append(convert(float(row[1])))
                except ValueError:
                    raise CsvFormatError(f"non-numeric value in {row!r}", line=lineno) from None
        if len(p_rf) < 2:
            raise CsvFormatError("need at least 2 data rows")
        return cls(np.array(p_rf), np.array(p_dc))


# ---------------------------------------------------------------------------
# Transmit schemes for the closed-form figure of merit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CwNoFading:
    """Single-antenna continuous wave over a deterministic unit channel."""


@dataclass(frozen=True)
class CwCscgFading:
    """Single-antenna continuous wave over unit-power Rayleigh fading."""


@dataclass(frozen=True)
class TdCw:
    """Phase-sweeping transmit diversity with a continuous wave."""

    m: int = 2

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError(f"antenna count must be >= 1, got {self.m}")


@dataclass(frozen=True)
class TdMod:
    """Transmit diversity combined with energy modulation."""

    m: int
    dist: ModulationDist

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError(f"antenna count must be >= 1, got {self.m}")


@dataclass(frozen=True)
class TdWf:
    """Transmit diversity combined with an in-phase multisine waveform."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError(f"antenna count must be >= 1, got {self.m}")
        if self.n < 1:
            raise ParameterError(f"tone count must be >= 1, got {self.n}")


Scheme = Union[CwNoFading, CwCscgFading, TdCw, TdMod, TdWf]


def fourth_order_factor(scheme: Scheme):
    """Multiplier applied to the fourth-order term by the given scheme."""
    if isinstance(scheme, CwNoFading):
        return 1.0
    if isinstance(scheme, CwCscgFading):
        return 2.0
    if isinstance(scheme, TdCw):
        return g_td(scheme.m)
    if isinstance(scheme, TdMod):
        return g_td(scheme.m) * g_mod(scheme.dist)
    if isinstance(scheme, TdWf):
        return g_td(scheme.m) * g_wf(scheme.n)
    raise ParameterError(f"unknown scheme: {scheme!r}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def taylor_from_diode(d: DiodeParams, r_ant):
    """Taylor model from diode parameters: ``k_i = i_s / (i! * (n*v_t)^i)``."""
    if r_ant <= 0:
        raise ParameterError(f"antenna resistance must be > 0, got {r_ant}")
    nvt = d.n * d.v_t
    k2 = d.i_s / (2.0 * nvt**2)
    k4 = d.i_s / (24.0 * nvt**4)
    return TaylorDiodeModel(k2=k2, k4=k4, r_ant=r_ant)


def zdc_from_moments(m: TaylorDiodeModel, m2, m4):
    """Figure of merit from measured signal moments:
    ``k2*R*m2 + k4*R^2*m4``.

    Rejects moment pairs violating Jensen's inequality (``m4 < m2^2`` beyond
    a 1e-9 relative slack), which signal a broken estimator.
    """
    if m2 < 0:
        raise ParameterError(f"m2 must be >= 0, got {m2}")
    if m4 < m2**2 * (1.0 - JENSEN_TOLERANCE):
        raise InvalidMomentsError(f"m4 = {m4} < m2^2 = {m2**2}: broken moment estimator?")
    return m.k2 * m.r_ant * m2 + m.k4 * m.r_ant**2 * m4


def zdc_closed_form(m: TaylorDiodeModel, p_rf_avg, scheme: Scheme):
    """Closed-form figure of merit at average received power ``p_rf_avg``.

    The second-order term is scheme-independent; the fourth-order term is
    ``(3/2)*k4*R^2*p^2`` boosted by the scheme's fourth-order factor.
    """
    if p_rf_avg <= 0:
        raise ParameterError(f"p_rf_avg must be > 0, got {p_rf_avg}")
    factor = fourth_order_factor(scheme)
    return m.k2 * m.r_ant * p_rf_avg + 1.5 * m.k4 * m.r_ant**2 * p_rf_avg**2 * factor


def fit_logpoly(data: FitDataset, degree=2):
    """Least-squares fit of the log-domain polynomial to a dataset.

    Solves the normal equations on the mean-centered design matrix (the
    problem has at most 3 unknowns, so no iterative solver is warranted).
    Degree 1 pins ``a = 0``. The validity range is the span of the input
    powers.
    """
    if degree not in (1, 2):
        raise ParameterError(f"degree must be 1 or 2, got {degree}")
    ln_p = np.log(data.p_rf)
    ln_d = np.log(data.p_dc)
    if np.unique(ln_p).size < degree + 1:
        raise FitError(f"need at least {degree + 1} distinct p_rf values for degree {degree}")

    cols = [ln_p**2, ln_p] if degree == 2 else [ln_p]
    means = [col.mean() for col in cols]
    x = np.column_stack([col - mu for col, mu in zip(cols, means)])
    y_mean = ln_d.mean()
    y = ln_d - y_mean
    gram = x.T @ x
    if np.linalg.cond(gram) > 1e12:
        raise FitError("rank-deficient design matrix (degenerate p_rf values)")
    beta = np.linalg.solve(gram, x.T @ y)
    c = y_mean - float(beta @ means)
    if degree == 2:
        a, b = float(beta[0]), float(beta[1])
    else:
        a, b = 0.0, float(beta[0])
    return LogPolyFitModel(
        a=a, b=b, c=c,
        valid_range=(float(data.p_rf.min()), float(data.p_rf.max())),
        degree=degree,
    )


def fit_rmse_log(model: LogPolyFitModel, data: FitDataset):
    """Root-mean-square residual of the fit in the log domain."""
    resid = np.log(data.p_dc) - model.log_poly(np.log(data.p_rf))
    return float(np.sqrt(np.mean(resid**2)))


def eval_fit(m: LogPolyFitModel, p_rf):
    """Predicted DC power in watts (0 below the sensitivity floor)."""
    return m.evaluate(p_rf)
