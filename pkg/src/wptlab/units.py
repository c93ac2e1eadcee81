"""dBm <-> watt conversions.

All internal computation is in watts; dBm appears only at I/O boundaries
(CLI arguments, CSV columns). The fixed convention is
``P_W = 10**((dBm - 30)/10)``.
"""

import numpy as np


def dbm_to_watts(dbm):
    """Convert a power level in dBm to watts (scalar or array)."""
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0) if np.ndim(dbm) else 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts):
    """Convert a power in watts to dBm (scalar or array). Requires watts > 0."""
    if np.ndim(watts):
        return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0
    return 10.0 * np.log10(watts) + 30.0
