"""Frequency planning: IF carrier placement, sum-term checks, range/beat conversion."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .waveform import C0, SMALL_ANGLE_RMS, ChirpParams, RadarScene, leakage_residual_rms


@dataclass(frozen=True)
class FrequencyPlan:
    base_fs: float
    n_factor: int
    band_index: int
    oversampled_fs: float
    if_carrier: float
    nfft: int

    @property
    def nyquist(self) -> float:
        return self.oversampled_fs / 2

    def default_window(self) -> tuple[float, float]:
        """Open search interval for the leakage tone, (NFs/4, NFs/2)."""
        return self.oversampled_fs / 4, self.oversampled_fs / 2


def fold(f, rate: float):
    """Apparent frequency in [0, rate/2] of a real tone at ``f`` sampled at ``rate``."""
    r = np.mod(np.abs(np.asarray(f, dtype=float)), rate)
    out = np.where(r > rate / 2, rate - r, r)
    return float(out) if np.ndim(out) == 0 else out


def make_plan(base_fs: float, n_factor: int = 4, band_index: int = 0, nfft: int = 8192) -> FrequencyPlan:
    if not (math.isfinite(base_fs) and base_fs > 0):
        raise ValueError("base_fs must be positive")
    if band_index < 0:
        raise ValueError("band_index must be >= 0")
    if n_factor <= 2:
        raise ValueError(
            f"oversampling factor {n_factor} is too small: sum-terms of the last mixing alias "
            "into the desired domain (use N >= 4)"
        )
    if n_factor == 3:
        warnings.warn("oversampling factor 3 leaves little room for the sum-terms; 4 is recommended", stacklevel=2)
    if nfft <= 0 or nfft & (nfft - 1):
        raise ValueError("nfft must be a power of two")
    nfs = n_factor * base_fs
    carrier = fold(nfs * (4 * band_index + 1) / 4, nfs)
    return FrequencyPlan(base_fs, int(n_factor), int(band_index), nfs, carrier, int(nfft))


def range_of_beat(f_beat, chirp: ChirpParams):
    """R = c T f / (2 B)."""
    return C0 * chirp.sweep_period * np.asarray(f_beat, dtype=float) / (2 * chirp.bandwidth) + 0.0


def beat_of_range(r, chirp: ChirpParams):
    """f = (B/T) (2R/c)."""
    return chirp.slope * 2 * np.asarray(r, dtype=float) / C0 + 0.0


def delay_of_range(r: float) -> float:
    return 2 * r / C0


@dataclass
class ValidationReport:
    passed: bool
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    paths: list[dict] = field(default_factory=list)
    leakage_if_hz: float = 0.0
    sum_term_raw_hz: float = 0.0
    sum_term_folded_hz: float = 0.0
    sum_bands_hz: dict = field(default_factory=dict)
    fold_rule: str = "f_folded = r if r <= NFs/2 else NFs - r, r = |f| mod NFs"

    def to_dict(self) -> dict:
        return asdict(self)


def _folded_band(lo: float, hi: float, rate: float, points: int = 513) -> tuple[float, float]:
    f = fold(np.linspace(lo, hi, points), rate)
    return float(f.min()), float(f.max())


def validate_plan(plan: FrequencyPlan, scene: RadarScene, lpf, window: Optional[tuple[float, float]] = None,
                  meaningful_count: Optional[int] = None) -> ValidationReport:
    """Check that the plan keeps every mixing sum-term in the LPF stopband.

    Desired IF content spans ``[f_leak, f_leak + Fs/2]``; after mixing with an
    NCO at ``f_nco`` its sum-terms occupy ``f_leak + f_nco + [0, Fs/2]``,
    folded into ``[0, NFs/2]``.  Both the proposed NCO (at the leakage tone)
    and the common NCO (at the nominal carrier) are checked.
    """
    rate = plan.oversampled_fs
    rep = ValidationReport(passed=True)
    if not math.isclose(lpf.rate, rate, rel_tol=1e-12):
        rep.failures.append(f"filter rate {lpf.rate:.6g} Hz differs from the oversampled rate {rate:.6g} Hz")

    leak = scene.dominant_leakage
    f_leak = fold(scene.if_frequency(leak), rate)
    rep.leakage_if_hz = f_leak
    rep.sum_term_raw_hz = 2 * f_leak
    rep.sum_term_folded_hz = fold(2 * f_leak, rate)

    lo, hi = window if window is not None else plan.default_window()
    if not lo < f_leak < hi:
        rep.failures.append(
            f"leakage IF tone {f_leak:.6g} Hz lies outside the estimator window ({lo:.6g}, {hi:.6g}) Hz"
        )

    ncos = {"proposed": f_leak, "common": plan.if_carrier}
    for name, f_nco in ncos.items():
        band = _folded_band(f_leak + f_nco, f_leak + f_nco + plan.base_fs / 2, rate)
        rep.sum_bands_hz[name] = list(band)
        if band[0] < lpf.stopband_edge:
            rep.failures.append(
                f"desired-domain collision: {name} sum-term band folds to [{band[0]:.6g}, {band[1]:.6g}] Hz, "
                f"reaching below the stopband edge {lpf.stopband_edge:.6g} Hz"
            )

    for i, p in enumerate(scene.paths):
        f_if = fold(scene.if_frequency(p), rate)
        entry = {
            "index": i,
            "kind": p.kind,
            "delay_s": p.delay,
            "beat_hz": scene.beat(p),
            "range_m": float(range_of_beat(scene.beat(p), scene.chirp)),
            "if_hz": f_if,
        }
        rep.paths.append(entry)
        for name, f_nco in ncos.items():
            s = fold(f_if + f_nco, rate)
            d = abs(f_if - f_nco)
            entry[f"{name}_sum_hz"] = s
            entry[f"{name}_difference_hz"] = d
            if s < lpf.stopband_edge:
                rep.failures.append(
                    f"path {i} ({p.kind}) {name} sum-term at {s:.6g} Hz falls below the stopband edge "
                    f"{lpf.stopband_edge:.6g} Hz"
                )
            if lpf.passband_edge < d < lpf.stopband_edge:
                rep.failures.append(
                    f"path {i} ({p.kind}) {name} difference-term at {d:.6g} Hz falls in the transition band"
                )
            elif d >= lpf.stopband_edge:
                rep.notes.append(f"path {i} ({p.kind}) {name} difference-term at {d:.6g} Hz is filtered out")
            elif d > plan.base_fs / 2:
                rep.notes.append(
                    f"path {i} ({p.kind}) {name} difference-term at {d:.6g} Hz exceeds Fs/2 and aliases after decimation"
                )

    rms = leakage_residual_rms(scene, plan)
    if rms > SMALL_ANGLE_RMS:
        rep.notes.append(f"leakage residual phase noise {rms:.3g} rad rms is outside the small-angle regime")

    if meaningful_count is not None and plan.nfft < meaningful_count:
        rep.failures.append(f"nfft {plan.nfft} is shorter than the {meaningful_count} meaningful samples")

    rep.passed = not rep.failures
    return rep
