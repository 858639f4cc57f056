"""Last down-conversion: the common carrier-LO baseline and the leakage-locked NCO technique."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .dsp_core import FilterCoefficients, decimate, fft_power_phase, mix, zero_phase_filter
from .planning import FrequencyPlan
from .waveform import IfSampleBlock

# peak must clear the window median by this much to count as a dominant leakage
MIN_PEAK_DB = 10.0


@dataclass(frozen=True)
class LeakageEstimate:
    bin_index: int
    if_beat_freq: float
    const_phase: float

    def to_dict(self) -> dict:
        return {"bin_index": self.bin_index, "if_beat_freq": self.if_beat_freq, "const_phase": self.const_phase}


@dataclass
class BasebandBlock:
    samples: np.ndarray
    chirp_index: int
    technique: Literal["common", "proposed"]
    rate: float
    applied_estimate: Optional[LeakageEstimate] = None


def _wrap(phase: float) -> float:
    p = math.remainder(phase, 2 * math.pi)
    return math.pi if p <= -math.pi else p


def estimate_leakage_tone(block: IfSampleBlock, plan: FrequencyPlan,
                          window: Optional[tuple[float, float]] = None) -> LeakageEstimate:
    """Locate the strongest tone in ``window`` on the zero-padded spectrum.

    Only the meaningful samples are transformed; the returned phase is
    referenced to the first meaningful sample.  Bins are 0-based, so the
    frequency is ``k * NFs / nfft``.
    """
    rate = plan.oversampled_fs
    lo, hi = window if window is not None else plan.default_window()
    if not 0 <= lo < hi <= rate / 2:
        raise ValueError(f"window ({lo}, {hi}) must lie inside [0, {rate / 2}]")
    spec = fft_power_phase(block.meaningful, plan.nfft, rate, onesided=True)
    k_lo = math.floor(lo / spec.bin_spacing) + 1
    k_hi = math.ceil(hi / spec.bin_spacing) - 1
    if lo == 0:
        k_lo = 0
    if k_hi < k_lo:
        raise ValueError(f"window ({lo}, {hi}) Hz contains no FFT bin at spacing {spec.bin_spacing:.6g} Hz")
    power = spec.power[k_lo:k_hi + 1]
    k = int(np.argmax(power))
    floor = np.median(power)
    if not power[k] > 0 or (floor > 0 and 10 * math.log10(power[k] / floor) < MIN_PEAK_DB):
        raise ValueError("no dominant leakage tone in the search window (spectrum is flat)")
    k += k_lo
    return LeakageEstimate(k, k * spec.bin_spacing, _wrap(float(np.angle(spec.bins[k]))))


def generate_nco(estimate: LeakageEstimate, count: int, plan: FrequencyPlan, start: int = 0) -> np.ndarray:
    """cos(2 pi f n / NFs + theta) for n = start .. start + count - 1."""
    if count <= 0:
        raise ValueError("count must be positive")
    n = np.arange(start, start + count)
    cycles = np.mod(estimate.if_beat_freq * n / plan.oversampled_fs, 1.0)
    return np.cos(2 * np.pi * cycles + estimate.const_phase)


def _down(block: IfSampleBlock, plan: FrequencyPlan, lpf: FilterCoefficients, lo: LeakageEstimate) -> np.ndarray:
    nco = generate_nco(lo, len(block.samples), plan, start=-block.offset)
    y = zero_phase_filter(lpf, mix(block.samples, nco))
    return decimate(y[block.offset:], plan.n_factor)


def proposed_downconvert(block: IfSampleBlock, plan: FrequencyPlan, lpf: FilterCoefficients,
                         estimate: Optional[LeakageEstimate] = None,
                         window: Optional[tuple[float, float]] = None) -> BasebandBlock:
    """Mix with an NCO locked to the leakage tone, filter, decimate.

    The dominant leakage lands at DC and every target at its own beat
    frequency, free of the internal-delay offset.  Pass ``estimate`` to reuse
    a previous chirp's estimate instead of re-estimating.
    """
    if estimate is None:
        estimate = estimate_leakage_tone(block, plan, window)
    out = _down(block, plan, lpf, estimate)
    return BasebandBlock(out, block.chirp_index, "proposed", plan.base_fs, estimate)


def common_downconvert(block: IfSampleBlock, plan: FrequencyPlan, lpf: FilterCoefficients) -> BasebandBlock:
    """Mix with an ideal LO at the nominal IF carrier (unit amplitude, zero phase)."""
    lo = LeakageEstimate(-1, plan.if_carrier, 0.0)
    out = _down(block, plan, lpf, lo)
    return BasebandBlock(out, block.chirp_index, "common", plan.base_fs, None)
