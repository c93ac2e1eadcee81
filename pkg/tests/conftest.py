import numpy as np
import pytest

from wptlab.harvester import DiodeParams, LogPolyFitModel
from wptlab.circuit import CircuitParams, SolverSettings
from wptlab.units import dbm_to_watts

# Published second-degree fits of the reference rectifier over the
# -40..-5 dBm range (natural log, watts): continuous-wave and 8-tone
# multisine excitation.
CW_FIT = dict(a=-0.0669, b=-0.1317, c=-6.3801)
MS_FIT = dict(a=-0.1105, b=-1.1468, c=-11.4342)
FIT_RANGE_W = (dbm_to_watts(-40.0), dbm_to_watts(-5.0))


@pytest.fixture(scope="session")
def cw_fit_model():
    return LogPolyFitModel(valid_range=FIT_RANGE_W, **CW_FIT)


@pytest.fixture(scope="session")
def ms_fit_model():
    return LogPolyFitModel(valid_range=FIT_RANGE_W, **MS_FIT)


@pytest.fixture(scope="session")
def identity_model():
    """Degree-1 model with p_dc = p_rf (unity efficiency, gain-free)."""
    return LogPolyFitModel(a=0.0, b=1.0, c=0.0, valid_range=(1e-12, 1.0), degree=1)


def power_model(d):
    """Degree-1 model with log-log slope d through (1 W, 1 W)."""
    degree = 1 if d != 0 else 1
    return LogPolyFitModel(a=0.0, b=float(d), c=0.0, valid_range=(1e-12, 10.0), degree=degree)


@pytest.fixture(scope="session")
def fig3_circuit():
    """The reference rectifier netlist values, desk-scaled."""
    return CircuitParams()


@pytest.fixture(scope="session")
def tiny_circuit():
    """Small, fast circuit geometry for functional tests: 16 carrier periods
    per window and a roughly one-window load time constant."""
    return CircuitParams(
        r_ant=50.0, c1=0.4e-12, l1=8.8e-9, diode=DiodeParams(),
        c2=6.4e-13, r_load=1e4, freq_scale=1000.0,
    )


# tiny_circuit geometry: carrier 2.45 GHz, window rate 2.45e9/16 = 153.125 MHz
TINY_CARRIER = 2.45e9
TINY_WINDOW_RATE = TINY_CARRIER / 16


@pytest.fixture(scope="session")
def fast_settings():
    return SolverSettings(samples_per_period=64, cw_window_periods=16)


def rel_err(value, reference):
    return abs(value - reference) / abs(reference)
