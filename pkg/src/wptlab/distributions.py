"""Energy-modulation input distributions.

All distributions are normalized to unit mean square, ``E[|s|^2] = 1``; what
distinguishes them for harvesting purposes is the fourth moment ``E[|s|^4]``.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class Cscg:
    """Circularly symmetric complex Gaussian symbols, unit variance."""

    @property
    def fourth_moment(self):
        return 2.0

    def sample(self, rng, count):
        z = rng.standard_normal((count, 2))
        return (z[:, 0] + 1j * z[:, 1]) / np.sqrt(2.0)


@dataclass(frozen=True)
class RealGaussian:
    """Real standard-Gaussian symbols (zero imaginary part)."""

    @property
    def fourth_moment(self):
        return 3.0

    def sample(self, rng, count):
        return rng.standard_normal(count).astype(complex)


@dataclass(frozen=True)
class Flash:
    """Two-point amplitude distribution with rare high-energy symbols.

    Amplitude 0 with probability 1 - 1/l^2 and amplitude ``l`` with
    probability 1/l^2; phase uniform on [0, 2*pi). ``l = 1`` degenerates to a
    constant unit amplitude.
    """

    l: float = 1.0

    def __post_init__(self):
        if self.l < 1.0:
            raise ParameterError(f"flash parameter l must be >= 1, got {self.l}")

    @property
    def fourth_moment(self):
        return self.l**2

    def sample(self, rng, count):
        # one uniform per symbol for the amplitude, then one for the phase
        amp = np.where(rng.random(count) < 1.0 / self.l**2, self.l, 0.0)
        phase = rng.random(count) * 2.0 * np.pi
        return amp * np.exp(1j * phase)


ModulationDist = Union[Cscg, RealGaussian, Flash]

_NAMES = {"cscg": Cscg, "real-gaussian": RealGaussian, "flash": Flash}


def dist_from_name(name, l=1.0):
    """Build a distribution from its CLI name (``cscg``, ``real-gaussian``, ``flash``)."""
    try:
        cls = _NAMES[name]
    except KeyError:
        raise ParameterError(f"unknown distribution {name!r}; expected one of {sorted(_NAMES)}") from None
    return cls(l) if cls is Flash else cls()
