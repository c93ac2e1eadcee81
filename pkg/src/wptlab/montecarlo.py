"""Stochastic oracles for the analytical gains.

Every closed-form or quadrature gain in the package has an independent
sampled counterpart here: empirical signal moments, the channel fourth
moment under uniform phase sweeping, and the fading / transmit-diversity
gains of the curve-fit harvester model.

Standard errors use batch means with 100 batches throughout; trials are
i.i.d., so this is exact for the Monte Carlo estimators and also covers the
correlated samples of the time-series moment estimator. Exponential samples
are drawn by inverse CDF of a uniform draw (``x = -log(1 - u)``), so oracle
values are reproducible from the documented RNG scheme alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DurationError, ParameterError
from .harvester import JENSEN_TOLERANCE, LogPolyFitModel
from .rng import substream
from .signals import SampledSignal

_N_BATCHES = 100
#: Trials are generated in fixed-size blocks from a single stream; block
#: boundaries do not affect the drawn values, they only bound peak memory.
_BLOCK = 1 << 17


@dataclass(frozen=True)
class MomentEstimate:
    """Second and fourth sample moments of a signal with standard errors."""

    m2: float
    m4: float
    se_m2: float
    se_m4: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ParameterError(f"count must be >= 2, got {self.count}")
        if self.m2 < 0:
            raise ParameterError(f"m2 must be >= 0, got {self.m2}")
        if self.m4 < self.m2**2 * (1.0 - JENSEN_TOLERANCE):
            raise ParameterError(f"m4 = {self.m4} < m2^2 = {self.m2**2} violates Jensen")


@dataclass(frozen=True)
class McResult:
    """A Monte Carlo estimate with its batch-means standard error."""

    estimate: float
    std_error: float
    trials: int
    seed: int

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.std_error < 0:
            raise ParameterError(f"std_error must be >= 0, got {self.std_error}")

    def agrees_with(self, reference, n_sigma=3.0):
        """True when ``reference`` lies within ``n_sigma`` standard errors."""
        return abs(self.estimate - reference) <= n_sigma * self.std_error

    def to_dict(self):
        return {
            "estimate": self.estimate,
            "std_error": self.std_error,
            "trials": self.trials,
            "seed": self.seed,
        }


def _batch_se(values):
    """Standard error of the mean via batch means (100 batches)."""
    n = values.size
    b = min(_N_BATCHES, n)
    size = n // b
    if size == 0 or b < 2:
        return float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    means = values[: b * size].reshape(b, size).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(b))


def estimate_moments(sig: SampledSignal):
    """Time-average second and fourth moments of a sampled signal.

    The signal should cover an integer number of beat periods where
    applicable; standard errors come from batch statistics over contiguous
    blocks.
    """
    y = sig.samples
    if y.size < 2:
        raise DurationError("signal too short for moment estimation")
    y2 = y * y
    y4 = y2 * y2
    return MomentEstimate(
        m2=float(y2.mean()),
        m4=float(y4.mean()),
        se_m2=_batch_se(y2),
        se_m4=_batch_se(y4),
        count=y.size,
    )


def _mc_values(trials, draw_block):
    """Concatenate per-block values drawn in fixed order from one stream."""
    parts = []
    done = 0
    while done < trials:
        count = min(_BLOCK, trials - done)
        parts.append(draw_block(count))
        done += count
    return parts[0] if len(parts) == 1 else np.concatenate(parts)


def mc_channel_fourth_moment(m, h=None, trials=1_000_000, seed=0):
    """Estimate ``E[|h(t)|^4] / M^2`` under i.i.d. uniform phase sweeping.

    ``h`` is the tuple of per-antenna complex gains (defaults to all ones).
    For equal unit gains the exact value is ``2 - 1/M``.
    """
    if m < 1:
        raise ParameterError(f"antenna count must be >= 1, got {m}")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    gains = np.ones(m, dtype=complex) if h is None else np.asarray(h, dtype=complex)
    if gains.shape != (m,):
        raise ParameterError(f"expected {m} channel gains, got shape {gains.shape}")
    rng = substream(seed, "channel-moment")

    def draw(count):
        psi = rng.uniform(0.0, 2.0 * np.pi, (count, m))
        heff = np.exp(1j * psi) @ gains
        p = np.abs(heff) ** 2
        return (p * p) / m**2

    values = _mc_values(trials, draw)
    return McResult(
        estimate=float(values.mean()),
        std_error=_batch_se(values),
        trials=trials,
        seed=seed,
    )


def _gain_ratio_values(model, p_rf_avg, x, denom):
    """Floored model evaluated at x*p_rf_avg, normalized by the unfloored
    model at p_rf_avg (the same denominator the quadratures factor out)."""
    p = x * p_rf_avg
    out = np.zeros_like(p)
    good = p > 0
    if model.p_rf_min is not None:
        good &= p >= model.p_rf_min
    pg = p[good]
    out[good] = np.exp(model.log_poly(np.log(pg)))
    return out / denom


def mc_fading_gain(model: LogPolyFitModel, p_rf_avg, trials=1_000_000, seed=0):
    """Sampled fading gain: average of ``P_dc(X * p_rf_avg) / P_dc(p_rf_avg)``
    with the channel power ``X ~ EXPO(1)`` drawn by inverse CDF.

    The sensitivity floor, when set, zeroes the numerator below it — the
    sampled equivalent of truncating the gain integral at
    ``x_min = p_rf_min / p_rf_avg``.
    """
    if p_rf_avg <= 0:
        raise ParameterError("p_rf_avg must be > 0")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    denom = np.exp(model.log_poly(np.log(p_rf_avg)))
    rng = substream(seed, "fading-gain")

    def draw(count):
        x = -np.log1p(-rng.random(count))
        return _gain_ratio_values(model, p_rf_avg, x, denom)

    values = _mc_values(trials, draw)
    return McResult(
        estimate=float(values.mean()),
        std_error=_batch_se(values),
        trials=trials,
        seed=seed,
    )


def mc_td_gain(model: LogPolyFitModel, p_rf_avg, m=2, h=None, trials=1_000_000, seed=0):
    """Sampled transmit-diversity gain for ``m`` phase-swept antennas.

    Per trial the effective channel power gain is ``|sum h_m e^{j psi_m}|^2/M``
    with i.i.d. uniform phases; the gain is the average of the floored model
    at the fluctuating power over the unfloored model at ``p_rf_avg``.
    """
    if m < 1:
        raise ParameterError(f"antenna count must be >= 1, got {m}")
    if p_rf_avg <= 0:
        raise ParameterError("p_rf_avg must be > 0")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    gains = np.ones(m, dtype=complex) if h is None else np.asarray(h, dtype=complex)
    if gains.shape != (m,):
        raise ParameterError(f"expected {m} channel gains, got shape {gains.shape}")
    denom = np.exp(model.log_poly(np.log(p_rf_avg)))
    rng = substream(seed, "td-gain")

    def draw(count):
        psi = rng.uniform(0.0, 2.0 * np.pi, (count, m))
        heff = np.exp(1j * psi) @ gains
        g = np.abs(heff) ** 2 / m
        return _gain_ratio_values(model, p_rf_avg, g, denom)

    values = _mc_values(trials, draw)
    return McResult(
        estimate=float(values.mean()),
        std_error=_batch_se(values),
        trials=trials,
        seed=seed,
    )
