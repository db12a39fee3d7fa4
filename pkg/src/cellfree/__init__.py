"""Two-stage activity detection and channel estimation for cell-free random access.

Stage I runs vector AMP at every AP and fuses per-AP activity statistics at
a central unit; Stage II re-estimates channels by LMMSE given the detected
activities. Closed-form approximations of both stages live in
:mod:`cellfree.analysis`.
"""

from . import amp, analysis, detection, geometry, lmmse, signal, special

__version__ = "0.1.0"

__all__ = ["amp", "analysis", "detection", "geometry", "lmmse", "signal", "special"]
