"""Transmit/receive signal synthesis for all signalling schemes.

A transmit setup is a waveform family (continuous wave, in-phase multisine,
or a modulated carrier) plus an M-antenna phase-sweeping configuration. The
received passband signal is

    y(t) = sqrt(2P/M) * Re{ h(t) * s(t) * exp(j*w0*t) } / sqrt(path_loss)

where ``s(t)`` is the unit-power baseband envelope and
``h(t) = sum_m h_m exp(j*psi_m(t))`` is the effective channel. Antenna phases
are piecewise constant: each is redrawn i.i.d. uniform on [0, 2pi) every
``1/phase_rate`` seconds (hold intervals are exactly
``floor(sample_rate/phase_rate)`` samples, plus a final partial interval).
With a single antenna the phase is fixed at zero, which costs no generality
and keeps single-antenna multisine output exactly periodic.

Synthesis is a pure function of its arguments and the seed: byte-identical
output for identical inputs. Per-antenna phase streams and the modulation
symbol stream are derived by fixed sub-seeding, so adding antennas never
perturbs existing streams.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .distributions import ModulationDist
from .errors import DurationError, NyquistError, ParameterError
from .rng import substream


@dataclass(frozen=True)
class Cw:
    """Unmodulated continuous wave: s(t) = 1."""


@dataclass(frozen=True)
class Multisine:
    """In-phase equal-power tones at spacing ``delta_f`` above the carrier:
    s(t) = sum_n exp(j*n*2pi*delta_f*t) / sqrt(n_tones)."""

    n_tones: int
    delta_f: float

    def __post_init__(self):
        if self.n_tones < 1:
            raise ParameterError(f"n_tones must be >= 1, got {self.n_tones}")
        if self.delta_f <= 0:
            raise ParameterError(f"delta_f must be > 0, got {self.delta_f}")


@dataclass(frozen=True)
class Modulated:
    """Carrier modulated by i.i.d. unit-power symbols held for
    ``1/symbol_rate`` seconds each."""

    dist: ModulationDist
    symbol_rate: float = 2.5e6

    def __post_init__(self):
        if self.symbol_rate <= 0:
            raise ParameterError(f"symbol_rate must be > 0, got {self.symbol_rate}")


WaveformFamily = Union[Cw, Multisine, Modulated]


@dataclass(frozen=True)
class WaveformSpec:
    """Waveform family plus average transmit power (W) and carrier (Hz)."""

    family: WaveformFamily
    power: float
    carrier: float

    def __post_init__(self):
        if self.power <= 0:
            raise ParameterError(f"power must be > 0, got {self.power}")
        if self.carrier <= 0:
            raise ParameterError(f"carrier must be > 0, got {self.carrier}")

    @property
    def bandwidth(self):
        """Baseband occupancy above the carrier, for Nyquist checks."""
        if isinstance(self.family, Multisine):
            return (self.family.n_tones - 1) * self.family.delta_f
        if isinstance(self.family, Modulated):
            return self.family.symbol_rate
        return 0.0


@dataclass(frozen=True)
class TransmitConfig:
    """M-antenna phase-sweeping setup over per-antenna complex gains."""

    m_antennas: int
    phase_rate: float
    channel: Tuple[complex, ...]
    path_loss: float = 1.0

    def __post_init__(self):
        if self.m_antennas < 1:
            raise ParameterError(f"m_antennas must be >= 1, got {self.m_antennas}")
        object.__setattr__(self, "channel", tuple(complex(h) for h in self.channel))
        if len(self.channel) != self.m_antennas:
            raise ParameterError(
                f"channel length {len(self.channel)} != m_antennas {self.m_antennas}"
            )
        if self.phase_rate <= 0:
            raise ParameterError(f"phase_rate must be > 0, got {self.phase_rate}")
        if self.path_loss < 1.0:
            raise ParameterError(f"path_loss must be >= 1 (linear), got {self.path_loss}")

    @classmethod
    def single_antenna(cls, phase_rate=2.5e6):
        return cls(m_antennas=1, phase_rate=phase_rate, channel=(1.0,))

    @classmethod
    def uniform(cls, m, phase_rate=2.5e6):
        """M antennas with unit channel gains."""
        return cls(m_antennas=m, phase_rate=phase_rate, channel=(1.0,) * m)


class SampledSignal:
    """Real receive-antenna signal (units sqrt(W)) on a uniform time grid."""

    def __init__(self, sample_rate, samples, duration):
        samples = np.asarray(samples, dtype=float)
        if sample_rate <= 0:
            raise ParameterError(f"sample_rate must be > 0, got {sample_rate}")
        if samples.ndim != 1:
            raise ParameterError("samples must be a 1-D array")
        if len(samples) != round(duration * sample_rate):
            raise ParameterError(
                f"length {len(samples)} != round(duration*sample_rate) "
                f"= {round(duration * sample_rate)}"
            )
        self.sample_rate = float(sample_rate)
        self.samples = samples
        self.duration = float(duration)

    def __len__(self):
        return len(self.samples)

    @property
    def times(self):
        return np.arange(len(self.samples)) / self.sample_rate

    def __eq__(self, other):
        if not isinstance(other, SampledSignal):
            return NotImplemented
        return (
            self.sample_rate == other.sample_rate
            and self.duration == other.duration
            and np.array_equal(self.samples, other.samples)
        )

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("t_s,y\n")
            for t, y in zip(self.times, self.samples):
                fh.write(f"{t!r},{y!r}\n")

    @classmethod
    def from_csv(cls, path):
        from .errors import CsvFormatError

        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "t_s,y":
                raise CsvFormatError(f"expected header 't_s,y', got {header!r}", line=1)
            rows = [line.split(",") for line in fh.read().split()]
        t = np.array([float(r[0]) for r in rows])
        y = np.array([float(r[1]) for r in rows])
        if len(t) < 2:
            raise CsvFormatError("need at least 2 samples")
        fs = 1.0 / (t[1] - t[0])
        return cls(sample_rate=fs, samples=y, duration=len(y) / fs)

    def to_binary(self, path):
        """Compact binary: little-endian float64 sample_rate, uint64 count,
        then count little-endian float64 samples."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<dQ", self.sample_rate, len(self.samples)))
            fh.write(self.samples.astype("<f8").tobytes())

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as fh:
            head = fh.read(16)
            if len(head) != 16:
                raise ParameterError("truncated signal file header")
            fs, count = struct.unpack("<dQ", head)
            payload = fh.read(8 * count)
            if len(payload) != 8 * count:
                raise ParameterError("truncated signal payload")
        samples = np.frombuffer(payload, dtype="<f8").astype(float)
        return cls(sample_rate=fs, samples=samples, duration=count / fs)


def sample_modulation(dist: ModulationDist, count, seed):
    """Draw ``count`` i.i.d. unit-power complex symbols from ``dist``.

    ``seed`` may be an integer (the dedicated modulation sub-stream is used)
    or a ``numpy.random.Generator`` to draw from directly.
    """
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "modulation")
    return dist.sample(rng, count)


def effective_channel(cfg: TransmitConfig, phases):
    """Effective channel ``sum_m h_m * exp(j*psi_m)`` for one phase draw."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (cfg.m_antennas,):
        raise ParameterError(
            f"expected {cfg.m_antennas} phases, got shape {phases.shape}"
        )
    return complex(np.sum(np.asarray(cfg.channel) * np.exp(1j * phases)))


def _antenna_phase_stream(seed, antenna_index):
    """Phase stream for one antenna; independent of all other antennas."""
    return substream(seed, "antenna", antenna_index)


def synthesize(w: WaveformSpec, cfg: TransmitConfig, duration, sample_rate, seed):
    """Synthesize the received signal for a waveform/transmit configuration.

    Requires ``sample_rate > 2*(carrier + bandwidth + phase spread)`` and, for
    multisine waveforms, a duration of at least one full envelope period
    ``1/delta_f``.
    """
    f0 = w.carrier
    spread = cfg.phase_rate if cfg.m_antennas > 1 else 0.0
    if sample_rate <= 2.0 * (f0 + w.bandwidth + spread):
        raise NyquistError(
            f"sample_rate {sample_rate} <= 2*(carrier+bandwidth) "
            f"= {2.0 * (f0 + w.bandwidth + spread)}"
        )
    n = int(round(duration * sample_rate))
    if n < 1:
        raise DurationError("duration too short: no samples")
    if isinstance(w.family, Multisine) and duration < 1.0 / w.family.delta_f:
        raise DurationError(
            f"duration {duration} shorter than one multisine period "
            f"{1.0 / w.family.delta_f}"
        )

    t = np.arange(n) / sample_rate

    # baseband envelope s(t)
    if isinstance(w.family, Cw):
        s = np.ones(n, dtype=complex)
    elif isinstance(w.family, Multisine):
        fam = w.family
        s = np.zeros(n, dtype=complex)
        for tone in range(fam.n_tones):
            s += np.exp(2j * np.pi * tone * fam.delta_f * t)
        s /= np.sqrt(fam.n_tones)
    else:
        fam = w.family
        hold = int(sample_rate // fam.symbol_rate)
        if hold < 1:
            raise NyquistError("sample_rate below symbol_rate")
        n_sym = -(-n // hold)
        symbols = sample_modulation(fam.dist, n_sym, substream(seed, "modulation"))
        s = np.repeat(symbols, hold)[:n]

    # effective channel h(t), piecewise constant over phase hold intervals
    gains = np.asarray(cfg.channel)
    if cfg.m_antennas == 1:
        h = np.full(n, gains[0], dtype=complex)
    else:
        hold = int(sample_rate // cfg.phase_rate)
        if hold < 1:
            raise NyquistError("sample_rate below phase_rate")
        n_int = -(-n // hold)
        h_int = np.zeros(n_int, dtype=complex)
        for m in range(cfg.m_antennas):
            psi = _antenna_phase_stream(seed, m).uniform(0.0, 2.0 * np.pi, n_int)
            h_int += gains[m] * np.exp(1j * psi)
        h = np.repeat(h_int, hold)[:n]

    amp = np.sqrt(2.0 * w.power / cfg.m_antennas) / np.sqrt(cfg.path_loss)
    y = amp * np.real(h * s * np.exp(2j * np.pi * f0 * t))
    return SampledSignal(sample_rate=sample_rate, samples=y, duration=n / sample_rate)
