"""IF-rate synthesis of a deramped FMCW chirp.

The deramped signal is built directly from its closed form, one cosine per
scattering path, at the oversampled IF rate.  Phase noise of the reference
chirp enters every path as the range-correlated difference
``phi(t) - phi(t - tau)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np

C0 = 299_792_458.0

# rng stream ids under (seed, chirp_index, stream)
_MASTER, _THERMAL, _TX_LO, _RX_LO = 0, 1, 2, 3

# residual phase-noise RMS (rad) above which first-order small-angle reasoning breaks down
SMALL_ANGLE_RMS = 0.3


@dataclass(frozen=True)
class ChirpParams:
    f_tx: float
    f_rx: float
    bandwidth: float
    sweep_period: float
    amplitude: float = 1.0
    const_phase: float = 0.0

    def __post_init__(self):
        for name in ("f_tx", "f_rx", "bandwidth", "sweep_period", "amplitude", "const_phase"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.bandwidth <= 0 or self.sweep_period <= 0 or self.amplitude <= 0:
            raise ValueError("bandwidth, sweep_period and amplitude must be positive")
        if self.f_tx < self.f_rx:
            warnings.warn(
                "f_tx < f_rx: beat frequencies subtract from |f_tx - f_rx|",
                stacklevel=2,
            )

    @property
    def slope(self) -> float:
        """Sweep rate B/T in Hz/s."""
        return self.bandwidth / self.sweep_period

    @property
    def if_carrier(self) -> float:
        """Signed analog IF carrier f_tx - f_rx."""
        return self.f_tx - self.f_rx


@dataclass(frozen=True)
class ScatteringPath:
    delay: float
    amplitude: float
    const_phase: float = 0.0
    kind: Literal["leakage", "target"] = "target"

    def __post_init__(self):
        if not (math.isfinite(self.delay) and math.isfinite(self.amplitude)):
            raise ValueError("path delay and amplitude must be finite")
        if self.delay < 0 or self.amplitude < 0:
            raise ValueError("path delay and amplitude must be non-negative")
        if self.kind not in ("leakage", "target"):
            raise ValueError(f"unknown path kind {self.kind!r}")


@dataclass(frozen=True)
class PhaseNoiseModel:
    """Power-law single-sideband phase-noise profile.

    ``L(f) = psd_anchor_dbc_hz + slope * log10(f / anchor_offset)`` up to
    ``cutoff``, flat beyond.  The one-sided phase PSD is ``2 * 10**(L/10)``
    rad^2/Hz.  ``psd_anchor_dbc_hz = -inf`` disables the noise.
    """

    psd_anchor_dbc_hz: float = -math.inf
    anchor_offset: float = 10e3
    slope: float = -20.0
    cutoff: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if math.isnan(self.psd_anchor_dbc_hz) or self.psd_anchor_dbc_hz == math.inf:
            raise ValueError("psd_anchor_dbc_hz must be finite or -inf")
        if not (math.isfinite(self.anchor_offset) and self.anchor_offset > 0):
            raise ValueError("anchor_offset must be positive and finite")
        if not math.isfinite(self.slope):
            raise ValueError("slope must be finite")
        if math.isnan(self.cutoff) or self.cutoff <= 0:
            raise ValueError("cutoff must be positive")

    @property
    def silent(self) -> bool:
        return self.psd_anchor_dbc_hz == -math.inf

    def ssb_dbc_hz(self, f) -> np.ndarray:
        f = np.minimum(np.asarray(f, dtype=float), self.cutoff)
        with np.errstate(divide="ignore"):
            return self.psd_anchor_dbc_hz + self.slope * np.log10(f / self.anchor_offset)

    def phase_psd(self, f) -> np.ndarray:
        """One-sided phase PSD in rad^2/Hz."""
        if self.silent:
            return np.zeros_like(np.asarray(f, dtype=float))
        return 2.0 * 10.0 ** (self.ssb_dbc_hz(f) / 10.0)

    def with_anchor(self, dbc_hz: float) -> "PhaseNoiseModel":
        return replace(self, psd_anchor_dbc_hz=dbc_hz)


@dataclass(frozen=True)
class RadarScene:
    chirp: ChirpParams
    paths: tuple[ScatteringPath, ...]
    noise: PhaseNoiseModel = field(default_factory=PhaseNoiseModel)
    thermal_noise_dbfs: float = -math.inf
    # independent heterodyne LO streams; off unless configured
    tx_lo_noise: Optional[PhaseNoiseModel] = None
    rx_lo_noise: Optional[PhaseNoiseModel] = None

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ValueError("scene needs at least one path")
        limit = self.chirp.sweep_period / 10
        for p in self.paths:
            if p.delay >= limit:
                raise ValueError(
                    f"path delay {p.delay:.3g} s must stay below sweep_period/10 = {limit:.3g} s"
                )
        if math.isnan(self.thermal_noise_dbfs) or self.thermal_noise_dbfs == math.inf:
            raise ValueError("thermal_noise_dbfs must be finite or -inf")

    @property
    def dominant_leakage(self) -> ScatteringPath:
        leaks = [p for p in self.paths if p.kind == "leakage"]
        if not leaks:
            raise ValueError("scene has no leakage path")
        return max(leaks, key=lambda p: p.amplitude)

    @property
    def targets(self) -> list[ScatteringPath]:
        return [p for p in self.paths if p.kind == "target"]

    def beat(self, path: ScatteringPath) -> float:
        return self.chirp.slope * path.delay

    def if_frequency(self, path: ScatteringPath) -> float:
        """Analog (unsampled) IF frequency of a path's deramped tone."""
        return self.chirp.if_carrier + self.beat(path)

    def if_phase(self, path: ScatteringPath) -> float:
        c, tau = self.chirp, path.delay
        theta = c.const_phase + 2 * math.pi * c.f_rx * tau - math.pi * c.slope * tau**2 - path.const_phase
        return float(np.angle(np.exp(1j * theta)))


@dataclass
class IfSampleBlock:
    samples: np.ndarray
    chirp_index: int
    meaningful_count: int
    rate: float

    def __post_init__(self):
        if self.meaningful_count > len(self.samples):
            raise ValueError("meaningful_count exceeds block length")

    @property
    def offset(self) -> int:
        """Index of the first meaningful sample (transients are trimmed from the start)."""
        return len(self.samples) - self.meaningful_count

    @property
    def meaningful(self) -> np.ndarray:
        return self.samples[self.offset:]


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *(int(k) for k in key)])


def synthesize_phase_noise(model: PhaseNoiseModel, count: int, rate: float, key: Sequence[int] = ()) -> np.ndarray:
    """Draw ``count`` samples of zero-mean Gaussian phase noise with the model PSD.

    White Gaussian noise is shaped in the frequency domain (circular
    synthesis); the DC bin is zeroed so the sequence has exactly zero mean.
    ``key`` selects an independent stream under the model seed.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    if not (math.isfinite(rate) and rate > 0):
        raise ValueError("rate must be positive and finite")
    if model.silent:
        return np.zeros(count)
    rng = _rng(model.seed, *key)
    spec = np.fft.rfft(rng.standard_normal(count))
    f = np.fft.rfftfreq(count, 1.0 / rate)
    gain = np.zeros_like(f)
    gain[1:] = np.sqrt(model.phase_psd(f[1:]) * rate / 2.0)
    return np.fft.irfft(spec * gain, count)


def delayed_difference(noise, rate: float, tau: float, history: Optional[int] = None) -> np.ndarray:
    """Return ``noise(t) - noise(t - tau)`` on the samples after ``history``.

    The first ``history`` samples of ``noise`` only serve as look-back for the
    delayed copy; ``history`` defaults to ``ceil(tau * rate)``.  Fractional
    delays use linear interpolation between neighbouring samples.
    """
    x = np.asarray(noise, dtype=float)
    if tau < 0 or not math.isfinite(tau):
        raise ValueError("tau must be finite and non-negative")
    shift = tau * rate
    need = math.ceil(shift)
    h = need if history is None else int(history)
    if h < need or h >= len(x):
        raise ValueError(
            f"delay of {shift:.3f} samples exceeds the available history window ({h} of {len(x)} samples)"
        )
    k = int(math.floor(shift))
    frac = shift - k
    idx = np.arange(h, len(x))
    delayed = x[idx - k]
    if frac > 0:
        delayed = (1.0 - frac) * delayed + frac * x[idx - k - 1]
    return x[h:] - delayed


def _difference_gain(f, rate: float, tau: float) -> np.ndarray:
    """|H(f)|^2 of the interpolated delayed difference, matching ``delayed_difference``."""
    shift = tau * rate
    k = math.floor(shift)
    frac = shift - k
    w = 2 * np.pi * np.asarray(f) / rate
    h = 1 - (1 - frac) * np.exp(-1j * w * k) - frac * np.exp(-1j * w * (k + 1))
    return np.abs(h) ** 2


def expected_difference_rms(model: PhaseNoiseModel, tau: float, rate: float, count: int) -> float:
    """Ensemble RMS of ``delayed_difference`` applied to a ``count``-sample synthesis."""
    if model.silent:
        return 0.0
    f = np.fft.rfftfreq(count, 1.0 / rate)[1:]
    df = rate / count
    weights = np.ones_like(f)
    if count % 2 == 0:
        weights[-1] = 0.5  # Nyquist bin carries half the one-sided weight
    var = np.sum(model.phase_psd(f) * _difference_gain(f, rate, tau) * weights) * df
    return float(np.sqrt(var))


def block_length(scene: RadarScene, plan) -> int:
    return int(round(scene.chirp.sweep_period * plan.oversampled_fs))


def _history(scene: RadarScene, rate: float) -> int:
    # fixed by the delay limit, so every scene on the same chirp shares one master stream
    return math.ceil(scene.chirp.sweep_period / 10 * rate) + 1


def leakage_residual_rms(scene: RadarScene, plan) -> float:
    """Expected RMS of the dominant leakage's IF phase noise over one block."""
    rate = plan.oversampled_fs
    n = block_length(scene, plan) + _history(scene, rate)
    return expected_difference_rms(scene.noise, scene.dominant_leakage.delay, rate, n)


def calibrate_residual_rms(scene: RadarScene, plan, target_rms: float) -> RadarScene:
    """Rescale the phase-noise anchor so the dominant leakage residual has ``target_rms``."""
    if target_rms <= 0:
        return replace(scene, noise=scene.noise.with_anchor(-math.inf))
    noise = scene.noise if not scene.noise.silent else scene.noise.with_anchor(-100.0)
    probe = replace(scene, noise=noise)
    current = leakage_residual_rms(probe, plan)
    if current == 0:
        raise ValueError("phase-noise model has no power at the leakage delay")
    if target_rms > SMALL_ANGLE_RMS:
        warnings.warn(f"residual phase noise of {target_rms} rad is outside the small-angle regime", stacklevel=2)
    anchor = noise.psd_anchor_dbc_hz + 20 * math.log10(target_rms / current)
    return replace(scene, noise=noise.with_anchor(anchor))


def master_phase_noise(scene: RadarScene, plan, chirp_index: int) -> tuple[np.ndarray, int]:
    """Reference-chirp phase noise for one block, with its look-back length."""
    rate = plan.oversampled_fs
    hist = _history(scene, rate)
    total = block_length(scene, plan) + hist
    return synthesize_phase_noise(scene.noise, total, rate, key=(chirp_index, _MASTER)), hist


def path_phase_noise(scene: RadarScene, plan, chirp_index: int) -> list[np.ndarray]:
    """IF phase noise of each path, in ``scene.paths`` order."""
    rate = plan.oversampled_fs
    master, hist = master_phase_noise(scene, plan, chirp_index)
    n = len(master) - hist
    tx_lo = rx_lo = None
    if scene.tx_lo_noise is not None:
        tx_lo = synthesize_phase_noise(scene.tx_lo_noise, len(master), rate, key=(chirp_index, _TX_LO))
    if scene.rx_lo_noise is not None:
        rx_lo = synthesize_phase_noise(scene.rx_lo_noise, n, rate, key=(chirp_index, _RX_LO))
    out = []
    for p in scene.paths:
        phi = delayed_difference(master, rate, p.delay, history=hist)
        if tx_lo is not None:
            # only the delayed copy of the TX-side LO reaches the mixer
            phi = phi - (tx_lo[hist:] - delayed_difference(tx_lo, rate, p.delay, history=hist))
        if rx_lo is not None:
            phi = phi + rx_lo
        out.append(phi)
    return out


def _check_zone(scene: RadarScene, path: ScatteringPath, rate: float):
    nyq = rate / 2
    carrier = scene.chirp.if_carrier
    f = scene.if_frequency(path)
    if carrier != 0 and np.sign(f) != np.sign(carrier) and f != 0:
        raise ValueError(f"path beat {scene.beat(path):.6g} Hz flips the sign of the IF carrier")
    if math.floor(abs(f) / nyq) != math.floor(abs(carrier) / nyq):
        raise ValueError(
            f"path IF frequency {abs(f):.6g} Hz crosses a Nyquist boundary of the "
            f"{rate:.6g} Hz synthesis rate and would alias"
        )


def thermal_noise_std(scene: RadarScene) -> float:
    """Per-sample RMS of the white floor, relative to the dominant leakage IF amplitude."""
    if scene.thermal_noise_dbfs == -math.inf:
        return 0.0
    leaks = [p.amplitude for p in scene.paths if p.kind == "leakage"]
    ref = scene.chirp.amplitude * (max(leaks) if leaks else 1.0) / 2
    return ref * 10 ** (scene.thermal_noise_dbfs / 20)


def synthesize_if_block(scene: RadarScene, plan, chirp_index: int = 0, meaningful_count: Optional[int] = None,
                        thermal: bool = True) -> IfSampleBlock:
    """Oversampled real IF beat signal of one chirp.

    Each path contributes ``(A*amp/2) cos(2 pi f_path n / NFs + theta_path + phi_path[n])``
    with ``f_path = (f_tx - f_rx) + (B/T) tau``.  Blocks are reproducible from
    ``(scene.noise.seed, chirp_index)``.
    """
    if chirp_index < 0:
        raise ValueError("chirp_index must be non-negative")
    rate = plan.oversampled_fs
    for p in scene.paths:
        _check_zone(scene, p, rate)
    n_samples = block_length(scene, plan)
    if meaningful_count is None:
        meaningful_count = 1 << (n_samples.bit_length() - 1)
    n = np.arange(n_samples)
    phis = path_phase_noise(scene, plan, chirp_index)
    x = np.zeros(n_samples)
    for p, phi in zip(scene.paths, phis):
        cycles = np.mod(scene.if_frequency(p) * n / rate, 1.0)
        x += (scene.chirp.amplitude * p.amplitude / 2) * np.cos(2 * np.pi * cycles + scene.if_phase(p) + phi)
    sigma = thermal_noise_std(scene)
    if thermal and sigma > 0:
        x += sigma * _rng(scene.noise.seed, chirp_index, _THERMAL).standard_normal(n_samples)
    return IfSampleBlock(x, chirp_index, meaningful_count, rate)
