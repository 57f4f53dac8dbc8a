"""Numerical model of a triply resonant four-wave-mixing OPO in hot Rb vapour."""

__version__ = "0.1.0"
