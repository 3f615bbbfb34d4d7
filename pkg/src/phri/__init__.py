"""Passivity-based hybrid force/velocity/attitude control of a redundant
manipulator on an unknown compliant surface, with a deterministic closed-loop
simulator and diagnostics."""

__version__ = "0.1.0"
