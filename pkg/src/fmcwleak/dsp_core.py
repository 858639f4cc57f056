"""Numerical kernels: zero-padded FFT, Butterworth design, zero-phase filtering, mixing, decimation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal


@dataclass
class Spectrum:
    bins: np.ndarray
    bin_spacing: float
    rate: float

    @property
    def nfft(self) -> int:
        return int(round(self.rate / self.bin_spacing))

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.bins) ** 2

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.bins)

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(len(self.bins)) * self.bin_spacing


def fft_power_phase(samples, nfft: int, rate: float = 1.0, window=None, onesided: bool = False) -> Spectrum:
    """Zero-padded FFT of a real sequence.

    ``window`` is an optional taper multiplied in before padding (rectangular
    by default).  With ``onesided`` only bins ``0..nfft//2`` are kept.
    """
    x = np.asarray(samples, dtype=float)
    if nfft < len(x):
        raise ValueError(f"nfft {nfft} is shorter than the {len(x)} input samples")
    if window is not None:
        x = x * np.asarray(window, dtype=float)
    bins = np.fft.rfft(x, nfft) if onesided else np.fft.fft(x, nfft)
    return Spectrum(bins, rate / nfft, rate)


@dataclass(frozen=True)
class FilterSpec:
    order: int
    passband_edge: float
    stopband_edge: float
    passband_atten_db: float
    stopband_atten_db: float
    rate: float

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("filter order must be >= 1")
        if not 0 < self.passband_edge < self.stopband_edge < self.rate / 2:
            raise ValueError("need 0 < passband_edge < stopband_edge < rate/2")
        if not 0 < self.passband_atten_db < self.stopband_atten_db:
            raise ValueError("need 0 < passband_atten_db < stopband_atten_db")

    def halved(self) -> "FilterSpec":
        """Single-pass targets whose forward-backward square meets this spec."""
        return FilterSpec(self.order, self.passband_edge, self.stopband_edge,
                          self.passband_atten_db / 2, self.stopband_atten_db / 2, self.rate)


@dataclass(frozen=True)
class FilterCoefficients:
    sos: np.ndarray
    dc_gain: float
    cutoff: float
    rate: float

    @property
    def pole_radii(self) -> np.ndarray:
        return np.concatenate([np.abs(np.roots(sec[3:])) for sec in self.sos])

    def response(self, f) -> np.ndarray:
        """Single-pass complex frequency response at ``f`` Hz."""
        return signal.sosfreqz(self.sos, worN=np.atleast_1d(np.asarray(f, dtype=float)), fs=self.rate)[1]

    def effective_length(self, energy_tol: float = 1e-12) -> int:
        """Samples until the impulse response holds all but ``energy_tol`` of its energy."""
        n = 64
        while True:
            imp = np.zeros(n)
            imp[0] = 1.0
            h = signal.sosfilt(self.sos, imp)
            e = np.cumsum(h**2)
            if e[-1] - e[n // 2] < energy_tol * e[-1] or n >= 1 << 20:
                return int(np.searchsorted(e, (1 - energy_tol) * e[-1]) + 1)
            n *= 2


def _prewarp(f: float, rate: float) -> float:
    return math.tan(math.pi * f / rate)


def butterworth_min_order(spec: FilterSpec) -> int:
    """Smallest Butterworth order meeting both edges (bilinear design)."""
    wp, ws = _prewarp(spec.passband_edge, spec.rate), _prewarp(spec.stopband_edge, spec.rate)
    gp = 10 ** (spec.passband_atten_db / 10) - 1
    gs = 10 ** (spec.stopband_atten_db / 10) - 1
    return math.ceil(math.log(gs / gp) / (2 * math.log(ws / wp)))


def design_butterworth_lowpass(spec: FilterSpec) -> FilterCoefficients:
    """Butterworth low-pass of exactly ``spec.order`` as second-order sections.

    The cutoff is the geometric mean of the interval of prewarped cutoffs that
    meet both the passband and the stopband targets, leaving equal margin on
    each side.  Raises if that interval is empty.
    """
    n = spec.order
    wp, ws = _prewarp(spec.passband_edge, spec.rate), _prewarp(spec.stopband_edge, spec.rate)
    lo = wp / (10 ** (spec.passband_atten_db / 10) - 1) ** (1 / (2 * n))
    hi = ws / (10 ** (spec.stopband_atten_db / 10) - 1) ** (1 / (2 * n))
    if lo > hi:
        raise ValueError(
            f"order {n} cannot meet {spec.passband_atten_db} dB at {spec.passband_edge:.6g} Hz and "
            f"{spec.stopband_atten_db} dB at {spec.stopband_edge:.6g} Hz "
            f"(needs order >= {butterworth_min_order(spec)})"
        )
    wc = math.sqrt(lo * hi)
    cutoff = math.atan(wc) * spec.rate / math.pi
    sos = signal.butter(n, cutoff, btype="low", output="sos", fs=spec.rate)
    dc = float(np.prod(sos[:, :3].sum(axis=1) / sos[:, 3:].sum(axis=1)))
    return FilterCoefficients(sos, dc, cutoff, spec.rate)


def zero_phase_filter(coeffs: FilterCoefficients, samples, padlen: Optional[int] = None) -> np.ndarray:
    """Forward-backward filtering with odd-reflection edge padding.

    Padding defaults to three effective impulse-response lengths.  Net phase is
    zero and the magnitude response is the single-pass response squared.
    """
    x = np.asarray(samples, dtype=float)
    if padlen is None:
        padlen = 3 * coeffs.effective_length()
    if len(x) <= padlen:
        raise ValueError(f"input of {len(x)} samples is too short for {padlen} samples of edge padding")
    return signal.sosfiltfilt(coeffs.sos, x, padtype="odd", padlen=padlen)


def mix(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return a * b


def decimate(samples, n_factor: int) -> np.ndarray:
    """Keep every ``n_factor``-th sample; band-limiting is the caller's job."""
    if n_factor < 1:
        raise ValueError("n_factor must be >= 1")
    x = np.asarray(samples)
    return x[: (len(x) // n_factor) * n_factor : n_factor].copy()
