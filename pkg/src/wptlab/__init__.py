"""wptlab: signal design and harvester modeling for wireless power transfer.

Subpackages and modules:

* :mod:`wptlab.harvester`   -- nonlinear harvester models (Taylor diode
  figure of merit, log-domain polynomial fit) and fitting.
* :mod:`wptlab.signals`     -- CW / multisine / modulated waveform synthesis
  with phase-sweeping transmit diversity.
* :mod:`wptlab.gains`       -- closed-form gains and the fading/diversity
  gain quadratures.
* :mod:`wptlab.montecarlo`  -- sampled oracles for every analytical gain.
* :mod:`wptlab.circuit`     -- SPICE-lite transient rectifier simulator
  (compiled kernel with pure-Python fallback).
* :mod:`wptlab.cli`         -- the ``wptlab`` command-line tool.
"""

__version__ = "0.1.0"

from . import circuit, distributions, gains, harvester, montecarlo, signals, units  # noqa: F401
from .rng import RNG_SCHEME  # noqa: F401
