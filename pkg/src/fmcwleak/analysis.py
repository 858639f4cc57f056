"""Range spectra, noise-floor comparison, alias prediction and peak picking."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .planning import range_of_beat
from .waveform import ChirpParams

FIT_ORDER = 8


@dataclass
class RangeSpectrum:
    power_db: np.ndarray
    range_axis: np.ndarray
    technique: str
    chirps_averaged: int

    def __post_init__(self):
        if len(self.power_db) != len(self.range_axis):
            raise ValueError("power and range axis lengths differ")

    @property
    def resolution(self) -> float:
        return float(self.range_axis[1] - self.range_axis[0])

    def bin_of(self, r: float) -> int:
        return int(np.argmin(np.abs(self.range_axis - r)))


def averaged_power_spectrum(blocks: Sequence, chirp: ChirpParams) -> RangeSpectrum:
    """Mean of |FFT|^2 over blocks, one-sided, in dB on a range axis.

    Power is normalised by ``n**2`` so an on-bin tone of amplitude ``a`` reads
    ``20 log10(a/2)``.  No window is applied.
    """
    if not blocks:
        raise ValueError("need at least one block")
    techniques = {b.technique for b in blocks}
    lengths = {len(b.samples) for b in blocks}
    rates = {b.rate for b in blocks}
    if len(techniques) > 1 or len(lengths) > 1 or len(rates) > 1:
        raise ValueError("blocks mix techniques, lengths or rates")
    n = lengths.pop()
    rate = rates.pop()
    acc = np.zeros(n // 2)
    for b in blocks:
        acc += np.abs(np.fft.rfft(b.samples)[: n // 2]) ** 2
    power = acc / (len(blocks) * n**2)
    with np.errstate(divide="ignore"):
        power_db = 10 * np.log10(power)
    axis = range_of_beat(np.arange(n // 2) * rate / n, chirp)
    return RangeSpectrum(power_db, axis, techniques.pop(), len(blocks))


@dataclass
class NoiseFloorReport:
    diff_db: np.ndarray
    support_range: np.ndarray
    fit_coeffs: np.ndarray
    fit_domain: tuple[float, float]
    exclusion_zone: float
    max_improvement_db: float
    min_improvement_db: float
    near_improvement_db: float
    far_improvement_db: float

    @property
    def fit(self) -> Polynomial:
        return Polynomial(self.fit_coeffs, domain=list(self.fit_domain))

    def to_dict(self) -> dict:
        return {
            "exclusion_zone_m": self.exclusion_zone,
            "support_m": [float(self.support_range[0]), float(self.support_range[-1])],
            "fit_order": FIT_ORDER,
            "fit_coeffs": [float(c) for c in self.fit_coeffs],
            "fit_domain_m": [float(v) for v in self.fit_domain],
            "max_improvement_db": self.max_improvement_db,
            "min_improvement_db": self.min_improvement_db,
            "near_improvement_db": self.near_improvement_db,
            "far_improvement_db": self.far_improvement_db,
            "diff_min_db": float(np.min(self.diff_db)),
            "diff_max_db": float(np.max(self.diff_db)),
        }


def default_exclusion_zone(spec: RangeSpectrum, floor_margin_db: float = 3.0, span: int = 32) -> float:
    """Range where the leakage peak's falling flank first comes within 3 dB of the local floor."""
    p = spec.power_db
    k = int(np.argmax(p))
    for i in range(k + 1, len(p)):
        floor = np.median(p[i:i + span])
        if p[i] <= floor + floor_margin_db:
            return float(spec.range_axis[i])
    return float(spec.range_axis[-1])


def noise_floor_difference(common: RangeSpectrum, proposed: RangeSpectrum,
                           exclusion_zone: Optional[float] = None,
                           support_max: Optional[float] = None) -> NoiseFloorReport:
    """Per-bin ``common - proposed`` in dB with an 8th-order least-squares trend.

    The support runs from ``exclusion_zone`` (default: end of the leakage
    flank on the common spectrum) up to ``support_max`` (default: end of axis).
    The fit runs on range mapped to [-1, 1].
    """
    if len(common.range_axis) != len(proposed.range_axis) or not np.allclose(
            common.range_axis, proposed.range_axis, rtol=1e-12, atol=0):
        raise ValueError("spectra have different range axes")
    if exclusion_zone is None:
        exclusion_zone = default_exclusion_zone(common)
    r = common.range_axis
    hi = r[-1] if support_max is None else support_max
    sel = (r >= exclusion_zone) & (r <= hi)
    if sel.sum() < FIT_ORDER + 1:
        raise ValueError(f"support holds {sel.sum()} bins, fewer than the {FIT_ORDER + 1} the fit needs")
    diff = common.power_db[sel] - proposed.power_db[sel]
    x = r[sel]
    domain = (float(x[0]), float(x[-1]))
    poly = Polynomial.fit(x, diff, FIT_ORDER, domain=list(domain))
    fitted = poly(x)
    return NoiseFloorReport(
        diff_db=diff,
        support_range=x,
        fit_coeffs=poly.coef.copy(),
        fit_domain=domain,
        exclusion_zone=float(exclusion_zone),
        max_improvement_db=float(fitted.max()),
        min_improvement_db=float(fitted.min()),
        near_improvement_db=float(fitted[0]),
        far_improvement_db=float(fitted[-1]),
    )


@dataclass(frozen=True)
class AliasPrediction:
    apparent: float
    observed: float
    aliased: bool
    usable_max: float

    def to_dict(self) -> dict:
        return {"apparent_m": self.apparent, "observed_m": self.observed,
                "aliased": self.aliased, "usable_max_m": self.usable_max}


def predict_alias(r_target: float, r_internal: float, r_max: float) -> AliasPrediction:
    """Where the common technique shows a target shifted by the internal delay."""
    if r_target < 0 or r_internal < 0 or r_max <= 0:
        raise ValueError("ranges must be non-negative and r_max positive")
    apparent = r_target + r_internal
    if apparent > 2 * r_max:
        raise ValueError(f"apparent range {apparent} m folds more than once about {r_max} m")
    aliased = apparent > r_max
    observed = 2 * r_max - apparent if aliased else apparent
    return AliasPrediction(apparent, observed, aliased, r_max - r_internal)


@dataclass(frozen=True)
class Peak:
    range: float
    power_db: float
    index: int

    def to_dict(self) -> dict:
        return {"range_m": self.range, "power_db": self.power_db}


def detect_peaks(spec: RangeSpectrum, min_prominence_db: float = 10.0, half_width: int = 16) -> list[Peak]:
    """Local maxima standing ``min_prominence_db`` above the median of their neighbourhood."""
    if min_prominence_db <= 0:
        raise ValueError("min_prominence_db must be positive")
    p = np.asarray(spec.power_db, dtype=float)
    padded = np.concatenate(([-np.inf], p, [-np.inf]))
    is_max = (padded[1:-1] > padded[:-2]) & (padded[1:-1] >= padded[2:])
    peaks = []
    for i in np.flatnonzero(is_max):
        hood = p[max(0, i - half_width): i + half_width + 1]
        if p[i] - np.median(hood) >= min_prominence_db:
            peaks.append(Peak(float(spec.range_axis[i]), float(p[i]), int(i)))
    peaks.sort(key=lambda q: q.power_db, reverse=True)
    return peaks


def tone_power_db(samples, freq: float, rate: float, nuisance: Sequence[float] = (0.0,)) -> float:
    """Power of a real tone at ``freq`` on the spectra's scale, ``20 log10(a/2)``.

    Amplitude comes from a joint least-squares fit of cosines and sines at
    ``freq`` and at the ``nuisance`` frequencies (DC by default), so strong
    neighbours do not leak into the estimate.
    """
    x = np.asarray(samples, dtype=float)
    n = np.arange(len(x))
    cols = []
    for f in (freq, *nuisance):
        w = 2 * np.pi * f * n / rate
        cols.append(np.cos(w))
        if f != 0:
            cols.append(np.sin(w))
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), x, rcond=None)
    amp = math.hypot(coef[0], coef[1])
    return 20 * math.log10(amp / 2)


def ac_power_db(blocks: Sequence) -> float:
    """Mean block power with the DC bin removed (Parseval), in dB."""
    if not blocks:
        raise ValueError("need at least one block")
    return 10 * math.log10(np.mean([np.var(b.samples) for b in blocks]))


def mean_tone_power_db(blocks: Sequence, freq: float, nuisance: Sequence[float] = (0.0,)) -> float:
    """Chirp-averaged power of a known tone, see ``tone_power_db``."""
    lin = [10 ** (tone_power_db(b.samples, freq, b.rate, nuisance) / 10) for b in blocks]
    return 10 * math.log10(np.mean(lin))
