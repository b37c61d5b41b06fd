"""Autonomous simulation agent harness.

Drives a chat model through a generate/execute/debug loop to carry out
simulation research missions, grades the resulting artifacts with physics
oracles, and scores agents with entropy weights + TOPSIS.
"""

__version__ = "0.1.0"
