"""Streaming window-by-window drive synthesis for steady-state runs.

Long transients (tens of thousands of carrier periods) never materialize the
full drive signal; it is produced one analysis window at a time. The carrier
and multisine envelope are precomputed once for a single canonical window,
which is exact because the steady-state protocol requires the carrier,
envelope, phase and symbol rates to be commensurate with the window rate.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ParameterError
from ..rng import substream
from ..signals import Cw, Modulated, Multisine, TransmitConfig, WaveformSpec

#: Analysis-window length for plain CW drives (no envelope, sweep or symbol
#: periodicity to honor): this many carrier periods, matching the geometry of
#: the default multisine/phase-sweep configurations.
DEFAULT_CW_WINDOW_PERIODS = 980


def _integer_ratio(num, den, what):
    ratio = num / den
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, abs(ratio)):
        raise ParameterError(f"{what} must be an integer, got {ratio}")
    return int(round(ratio))


class WindowedDrive:
    """Generates successive source-voltage windows for the transient kernel.

    All quantities are in the (already frequency-scaled) simulation units.
    ``vscale`` converts the received signal y (sqrt(W)) to the source voltage
    (2*sqrt(r_ant) for the standard antenna model).
    """

    def __init__(self, w: WaveformSpec, cfg: TransmitConfig, samples_per_period,
                 seed, vscale=1.0, cw_window_periods=DEFAULT_CW_WINDOW_PERIODS):
        self.w = w
        self.cfg = cfg
        f0 = w.carrier
        fam = w.family

        rates = []
        if isinstance(fam, Multisine):
            rates.append(fam.delta_f)
        if isinstance(fam, Modulated):
            rates.append(fam.symbol_rate)
        if cfg.m_antennas > 1:
            rates.append(cfg.phase_rate)
        self.window_rate = min(rates) if rates else f0 / cw_window_periods

        periods = _integer_ratio(f0, self.window_rate, "carrier periods per window")
        self.sample_rate = samples_per_period * f0
        self.wlen = samples_per_period * periods

        t = (np.arange(self.wlen) + 1.0) / self.sample_rate
        envelope = np.exp(2j * np.pi * f0 * t)
        if isinstance(fam, Multisine):
            _integer_ratio(fam.delta_f, self.window_rate, "multisine periods per window")
            base = np.zeros(self.wlen, dtype=complex)
            for tone in range(fam.n_tones):
                base += np.exp(2j * np.pi * tone * fam.delta_f * t)
            envelope *= base / np.sqrt(fam.n_tones)
        self._e_re = np.ascontiguousarray(envelope.real)
        self._e_im = np.ascontiguousarray(envelope.imag)

        self._amp = vscale * np.sqrt(2.0 * w.power / cfg.m_antennas) / np.sqrt(cfg.path_loss)
        self._gains = np.asarray(cfg.channel)
        self._window_index = 0

        # phase-sweep bookkeeping
        self.stochastic = False
        if cfg.m_antennas > 1:
            self.stochastic = True
            self._phase_rngs = [substream(seed, "antenna", m) for m in range(cfg.m_antennas)]
            if cfg.phase_rate >= self.window_rate:
                self._ints_per_window = _integer_ratio(cfg.phase_rate, self.window_rate,
                                                       "phase intervals per window")
                if self.wlen % self._ints_per_window:
                    raise ParameterError("phase interval does not divide the window")
                self._windows_per_int = 1
            else:
                self._ints_per_window = 1
                self._windows_per_int = _integer_ratio(self.window_rate, cfg.phase_rate,
                                                       "windows per phase interval")
            self._held_h = None

        # modulation bookkeeping
        self._modulated = isinstance(fam, Modulated)
        if self._modulated:
            self.stochastic = True
            self._sym_rng = substream(seed, "modulation")
            self._dist = fam.dist
            if fam.symbol_rate >= self.window_rate:
                self._syms_per_window = _integer_ratio(fam.symbol_rate, self.window_rate,
                                                       "symbols per window")
                if self.wlen % self._syms_per_window:
                    raise ParameterError("symbol interval does not divide the window")
                self._windows_per_sym = 1
            else:
                self._syms_per_window = 1
                self._windows_per_sym = _integer_ratio(self.window_rate, fam.symbol_rate,
                                                       "windows per symbol")
            self._held_sym = None

    @property
    def p_rf_avg(self):
        """Average received RF power: P * mean|h|^2 / (M * path_loss), where
        mean|h|^2 = sum|h_m|^2 under independent uniform phases."""
        g2 = float(np.sum(np.abs(self._gains) ** 2))
        return self.w.power * g2 / (self.cfg.m_antennas * self.cfg.path_loss)

    def _channel_factors(self):
        """Effective channel per phase interval of the current window."""
        m = self.cfg.m_antennas
        if m == 1:
            return np.array([self._gains[0]])
        if self._windows_per_int > 1:
            if self._window_index % self._windows_per_int == 0 or self._held_h is None:
                h = 0j
                for g, rng in zip(self._gains, self._phase_rngs):
                    h += g * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
                self._held_h = np.array([h])
            return self._held_h
        k = self._ints_per_window
        h = np.zeros(k, dtype=complex)
        for g, rng in zip(self._gains, self._phase_rngs):
            h += g * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, k))
        return h

    def _symbol_factors(self):
        """Modulation symbol per symbol interval of the current window."""
        if not self._modulated:
            return None
        if self._windows_per_sym > 1:
            if self._window_index % self._windows_per_sym == 0 or self._held_sym is None:
                self._held_sym = self._dist.sample(self._sym_rng, 1)
            return self._held_sym
        return self._dist.sample(self._sym_rng, self._syms_per_window)

    def next_window(self):
        """Source voltage samples for the next window (length ``wlen``)."""
        h = self._channel_factors()
        sym = self._symbol_factors()
        self._window_index += 1
        if sym is None:
            factor = h
        else:
            k = math.lcm(h.size, sym.size)
            factor = np.repeat(h, k // h.size) * np.repeat(sym, k // sym.size)
        if factor.size == 1:
            f = complex(factor[0])
            return self._amp * (f.real * self._e_re - f.imag * self._e_im)
        fr = np.repeat(factor.real, self.wlen // factor.size)
        fi = np.repeat(factor.imag, self.wlen // factor.size)
        return self._amp * (fr * self._e_re - fi * self._e_im)
