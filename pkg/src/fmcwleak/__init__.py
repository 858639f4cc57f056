"""Leakage-locked down-conversion for FMCW radar: simulation and DSP."""
