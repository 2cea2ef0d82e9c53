"""Closed-loop power control for a mmWave transmit chain.

PID, pure-integral and fuzzy-integral controllers driving a digital step
attenuator, a simulated RF chain with PA compression, an RMS detector
model, and EVM analysis.
"""

from ._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
