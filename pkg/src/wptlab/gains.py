"""Closed-form harvesting gains and the two gain quadratures.

The closed-form factors quantify how much a signalling choice boosts the
fourth-order (nonlinear) term of the harvester response:

* ``g_td(M)``  -- phase-sweeping transmit diversity with M equal-strength
  antennas, ``1 + (M-1)/M``;
* ``g_mod``    -- energy modulation, the fourth moment of the symbol
  distribution;
* ``g_wf(N)``  -- in-phase N-tone multisine, ``(2N^2 + 1)/(3N)``.

Under the log-domain polynomial harvester fit, the corresponding harvested
power gains are 1-D integrals: ``e_fading`` averages the fit over an
exponential (Rayleigh power) channel distribution and ``e_td2`` over the
effective channel of two phase-swept antennas. Both are evaluated by adaptive
quadrature with an analytically bounded tail truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaincc

from .distributions import Cscg, Flash, ModulationDist, RealGaussian
from .errors import DivergentIntegralError, ParameterError, QuadratureConvergenceError

if TYPE_CHECKING:  # pragma: no cover
    from .harvester import LogPolyFitModel


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances for the gain integrals.

    Defaults are far tighter than needed for plotting O(1) gains on linear
    axes, yet cheap for 1-D integrals.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ParameterError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ParameterError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureSettings()


@dataclass(frozen=True)
class GainDecomposition:
    """Split of the overall conversion efficiency into a no-fluctuation part
    and a multiplicative fluctuation gain. ``combined`` is their product by
    construction."""

    e_rfdc: float
    gain_factor: float
    combined: float
    extrapolated: bool = False


def g_td(m):
    """Transmit-diversity fourth-order gain for ``m`` equal-strength antennas."""
    if m < 1 or int(m) != m:
        raise ParameterError(f"antenna count must be an integer >= 1, got {m}")
    m = int(m)
    return 1.0 + (m - 1) / m


def g_mod(dist: ModulationDist):
    """Energy-modulation gain: the fourth moment of the symbol distribution."""
    if not isinstance(dist, (Cscg, RealGaussian, Flash)):
        raise ParameterError(f"unknown modulation distribution: {dist!r}")
    return dist.fourth_moment


def g_wf(n):
    """In-phase multisine waveform gain for ``n`` equal-power tones."""
    if n < 1 or int(n) != n:
        raise ParameterError(f"tone count must be an integer >= 1, got {n}")
    n = int(n)
    return (2.0 * n**2 + 1.0) / (3.0 * n)


def _fading_exponent(model, p_rf_avg):
    """Local log-log slope d = 2*a*ln(p) + b at the operating point."""
    return 2.0 * model.a * math.log(p_rf_avg) + model.b


def _quad(f, lo, hi, q):
    val, err = quad(f, lo, hi, epsabs=q.abs_tol, epsrel=q.rel_tol, limit=q.max_subdivisions)
    if not math.isfinite(val):
        raise QuadratureConvergenceError(f"non-finite quadrature result on [{lo}, {hi}]")
    if err > max(q.abs_tol, q.rel_tol * abs(val)) * 50.0:
        raise QuadratureConvergenceError(
            f"quadrature error estimate {err:.3e} exceeds tolerance on [{lo}, {hi}]"
        )
    return val


def e_fading(model: "LogPolyFitModel", p_rf_avg, q: QuadratureSettings = DEFAULT_QUADRATURE):
    """Harvested-power gain of an exponentially distributed channel power.

    Computes ``int_xmin^inf x^(d + a*ln x) * exp(-x) dx`` with
    ``d = 2*a*ln(p_rf_avg) + b`` and ``xmin = p_rf_min / p_rf_avg`` when the
    model carries a sensitivity floor (0 otherwise). For a linear fit
    (``a = 0``) this is an incomplete-Gamma value; ``a > 0`` diverges and is
    rejected.
    """
    if p_rf_avg <= 0:
        raise ParameterError("p_rf_avg must be > 0")
    a = model.a
    d = _fading_exponent(model, p_rf_avg)
    if a > 0:
        raise DivergentIntegralError(f"integral diverges for a = {a} > 0")
    if a == 0 and d <= -1:
        raise DivergentIntegralError(f"integral diverges for a = 0 and d = {d} <= -1")
    x_min = 0.0
    if model.p_rf_min is not None:
        x_min = model.p_rf_min / p_rf_avg

    def f(x):
        return x ** (d + a * np.log(x)) * np.exp(-x)

    # Integrate on [x_min, X], doubling X until the analytic tail bound
    # int_X^inf x^qexp * e^-x dx (with qexp >= the local exponent on x >= 1)
    # drops below abs_tol.
    qexp = max(d, 0.0)
    hi = max(30.0, 8.0 * (1.0 + abs(d)), 2.0 * x_min)
    total = _quad(f, x_min, hi, q) if x_min < hi else 0.0
    for _ in range(64):
        tail_bound = math.gamma(qexp + 1.0) * gammaincc(qexp + 1.0, hi)
        if tail_bound <= q.abs_tol or tail_bound <= q.rel_tol * abs(total):
            return total
        total += _quad(f, hi, 2.0 * hi, q)
        hi *= 2.0
    raise QuadratureConvergenceError("tail truncation did not converge")


def e_td2(model: "LogPolyFitModel", p_rf_avg, q: QuadratureSettings = DEFAULT_QUADRATURE):
    """Harvested-power gain of two-antenna phase-sweeping diversity.

    Averages the fit over the effective channel power ``1 + cos(U)`` of two
    equal-strength antennas with independent uniform phases:
    ``(1/2pi) * int_0^2pi (1+cos u)^(d + a*ln(1+cos u)) du``. The integrand is
    symmetric about ``u = pi``, where it is continuously extended by 0. When
    the model carries a sensitivity floor, the region where the instantaneous
    power falls below it contributes 0, mirroring the floored evaluation used
    by the Monte Carlo oracle.
    """
    if p_rf_avg <= 0:
        raise ParameterError("p_rf_avg must be > 0")
    a = model.a
    d = _fading_exponent(model, p_rf_avg)
    if a > 0:
        raise DivergentIntegralError(f"integrand blows up at u = pi for a = {a} > 0")
    if a == 0 and d <= 0:
        raise DivergentIntegralError(f"a = 0 requires d > 0, got d = {d}")

    u_max = math.pi
    if model.p_rf_min is not None:
        x_min = model.p_rf_min / p_rf_avg
        if x_min >= 2.0:
            return 0.0
        if x_min > 0.0:
            u_max = math.acos(x_min - 1.0)

    def f(u):
        c = 1.0 + math.cos(u)
        if c <= 0.0:
            return 0.0
        lc = math.log(c)
        return math.exp((d + a * lc) * lc)

    return _quad(f, 0.0, u_max, q) / math.pi


def decompose(
    model: "LogPolyFitModel",
    p_rf_avg,
    mode: Literal["fading", "td2"],
    q: QuadratureSettings = DEFAULT_QUADRATURE,
):
    """Split conversion efficiency at ``p_rf_avg`` into the no-fluctuation
    efficiency and the fading or two-antenna diversity gain factor."""
    if mode == "fading":
        gain = e_fading(model, p_rf_avg, q)
    elif mode == "td2":
        gain = e_td2(model, p_rf_avg, q)
    else:
        raise ParameterError(f"mode must be 'fading' or 'td2', got {mode!r}")
    e_rfdc = model.evaluate(p_rf_avg) / p_rf_avg
    return GainDecomposition(
        e_rfdc=e_rfdc,
        gain_factor=gain,
        combined=e_rfdc * gain,
        extrapolated=model.is_extrapolated(p_rf_avg),
    )
