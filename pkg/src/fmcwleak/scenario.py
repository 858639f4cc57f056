"""Config-driven scenario runs: parse a JSON scenario, simulate, process, write artifacts."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import analysis
from .downconvert import common_downconvert, estimate_leakage_tone, proposed_downconvert
from .dsp_core import FilterSpec, design_butterworth_lowpass
from .planning import FrequencyPlan, beat_of_range, fold, make_plan, range_of_beat, validate_plan
from .waveform import (C0, _check_zone, ChirpParams, PhaseNoiseModel, RadarScene, ScatteringPath, block_length,
                       calibrate_residual_rms, leakage_residual_rms, synthesize_if_block)

SCHEMA_VERSION = 1
TECHNIQUES = ("common", "proposed")
PRESETS = ("experiment_a", "experiment_b")

_TOP = {"name", "scene", "plan", "filter", "n_chirps", "techniques", "seed", "freeze_estimate", "output_dir"}
_SCENE = {"chirp", "internal_range_m", "internal_delay_s", "paths", "phase_noise", "thermal_noise_dbfs"}
_CHIRP = {"f_tx", "f_rx", "bandwidth", "sweep_period", "amplitude", "const_phase"}
_PATH = {"kind", "range_m", "amplitude_db", "const_phase"}
_NOISE = {"anchor_dbc_hz", "residual_rms", "anchor_offset", "slope", "cutoff"}
_PLAN = {"base_fs", "n_factor", "band_index", "nfft"}
_FILTER = {"order", "passband_edge", "stopband_edge", "passband_atten_db", "stopband_atten_db", "rate",
           "attenuation_convention"}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario config:\n  " + "\n  ".join(self.errors))


@dataclass
class ScenarioConfig:
    name: str
    scene: RadarScene
    plan: FrequencyPlan
    filter: FilterSpec
    n_chirps: int
    techniques: tuple[str, ...]
    seed: int
    output_dir: Optional[str] = None
    freeze_estimate: bool = False
    filter_convention: str = "single_pass"
    source: dict = field(default_factory=dict)

    @property
    def block_length(self) -> int:
        return block_length(self.scene, self.plan)

    @property
    def meaningful_count(self) -> int:
        n = self.block_length
        return 1 << (n.bit_length() - 1)


class _Fields:
    """Collects every problem in a document instead of stopping at the first."""

    def __init__(self):
        self.errors: list[str] = []

    def section(self, doc: Any, allowed: set, where: str) -> dict:
        if not isinstance(doc, dict):
            self.errors.append(f"{where}: expected an object")
            return {}
        for k in sorted(set(doc) - allowed):
            self.errors.append(f"{where}: unknown key {k!r}")
        return doc

    def get(self, doc: dict, key: str, where: str, kind=float, default=..., check=None, msg=""):
        if key not in doc:
            if default is ...:
                self.errors.append(f"{where}.{key}: missing required key")
                return None
            return default
        v = doc[key]
        try:
            if kind is float and (isinstance(v, bool) or not isinstance(v, (int, float))):
                raise TypeError
            if kind is int and (isinstance(v, bool) or not isinstance(v, int)):
                raise TypeError
            if kind is bool and not isinstance(v, bool):
                raise TypeError
            if kind is str and not isinstance(v, str):
                raise TypeError
            v = kind(v)
        except (TypeError, ValueError):
            self.errors.append(f"{where}.{key}: expected {kind.__name__}, got {v!r}")
            return None
        if check is not None and not check(v):
            self.errors.append(f"{where}.{key}: {msg} (got {v!r})")
            return None
        return v

    def build(self, where: str, fn, *args, **kwargs):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return fn(*args, **kwargs)
        except (ValueError, TypeError) as exc:
            self.errors.append(f"{where}: {exc}")
            return None


def _dbfs(v):
    # JSON has no -inf; null means "off"
    return -math.inf if v is None else v


def config_from_dict(doc: Any) -> ScenarioConfig:
    """Validate a scenario document and build the domain objects it describes."""
    f = _Fields()
    top = f.section(doc, _TOP, "config")
    name = f.get(top, "name", "config", str, default="scenario")
    n_chirps = f.get(top, "n_chirps", "config", int, default=1, check=lambda v: v >= 1, msg="must be >= 1")
    seed = f.get(top, "seed", "config", int, default=0, check=lambda v: v >= 0, msg="must be >= 0")
    freeze = f.get(top, "freeze_estimate", "config", bool, default=False)
    out = top.get("output_dir")
    if out is not None and not isinstance(out, str):
        f.errors.append("config.output_dir: expected a path string")
        out = None
    techniques = top.get("techniques", list(TECHNIQUES))
    if isinstance(techniques, str):
        techniques = [techniques]
    if not isinstance(techniques, list) or not techniques or any(t not in TECHNIQUES for t in techniques):
        f.errors.append(f"config.techniques: expected a non-empty subset of {list(TECHNIQUES)}, got {techniques!r}")
        techniques = list(TECHNIQUES)
    techniques = tuple(t for t in TECHNIQUES if t in techniques)

    # plan
    p = f.section(top.get("plan", {}) if "plan" in top else f.errors.append("config.plan: missing section") or {},
                  _PLAN, "plan")
    plan = None
    base_fs = f.get(p, "base_fs", "plan", float, check=lambda v: v > 0 and math.isfinite(v), msg="must be positive")
    n_factor = f.get(p, "n_factor", "plan", int, default=4)
    band = f.get(p, "band_index", "plan", int, default=0)
    nfft = f.get(p, "nfft", "plan", int, default=8192)
    if None not in (base_fs, n_factor, band, nfft):
        plan = f.build("plan", make_plan, base_fs, n_factor, band, nfft)

    # filter
    fl = f.section(top.get("filter", {}) if "filter" in top else f.errors.append("config.filter: missing section") or {},
                   _FILTER, "filter")
    fvals = {k: f.get(fl, k, "filter", float) for k in
             ("passband_edge", "stopband_edge", "passband_atten_db", "stopband_atten_db")}
    order = f.get(fl, "order", "filter", int)
    nominal = base_fs * n_factor if None not in (base_fs, n_factor) else None
    rate = f.get(fl, "rate", "filter", float, default=nominal)
    convention = f.get(fl, "attenuation_convention", "filter", str, default="single_pass",
                       check=lambda v: v in ("single_pass", "zero_phase"), msg="must be 'single_pass' or 'zero_phase'")
    fspec = None
    if order is not None and rate is not None and None not in fvals.values():
        fspec = f.build("filter", FilterSpec, order=order, rate=rate, **fvals)
        if fspec is not None and nominal is not None and not math.isclose(rate, nominal, rel_tol=1e-12):
            f.errors.append(f"filter.rate: {rate} Hz differs from the oversampled rate {nominal} Hz")
        if fspec is not None:
            f.build("filter", design_butterworth_lowpass,
                    fspec.halved() if convention == "zero_phase" else fspec)

    # scene
    s = f.section(top.get("scene", {}) if "scene" in top else f.errors.append("config.scene: missing section") or {},
                  _SCENE, "scene")
    c = f.section(s.get("chirp", {}) if "chirp" in s else f.errors.append("scene.chirp: missing section") or {},
                  _CHIRP, "scene.chirp")
    cvals = {k: f.get(c, k, "scene.chirp", float) for k in ("f_tx", "f_rx", "bandwidth", "sweep_period")}
    cvals["amplitude"] = f.get(c, "amplitude", "scene.chirp", float, default=1.0)
    cvals["const_phase"] = f.get(c, "const_phase", "scene.chirp", float, default=0.0)
    chirp = None
    if None not in cvals.values():
        chirp = f.build("scene.chirp", ChirpParams, **cvals)

    if "internal_range_m" in s and "internal_delay_s" in s:
        f.errors.append("scene: give only one of internal_range_m and internal_delay_s")
    tau_int = 0.0
    if "internal_delay_s" in s:
        tau_int = f.get(s, "internal_delay_s", "scene", float, check=lambda v: v >= 0, msg="must be >= 0") or 0.0
    elif "internal_range_m" in s:
        r = f.get(s, "internal_range_m", "scene", float, check=lambda v: v >= 0, msg="must be >= 0")
        tau_int = 2 * (r or 0.0) / C0

    paths = []
    raw_paths = s.get("paths")
    if not isinstance(raw_paths, list) or not raw_paths:
        f.errors.append("scene.paths: expected a non-empty list")
        raw_paths = []
    for i, rp in enumerate(raw_paths):
        where = f"scene.paths[{i}]"
        rp = f.section(rp, _PATH, where)
        kind = f.get(rp, "kind", where, str, check=lambda v: v in ("leakage", "target"), msg="must be leakage or target")
        rng = f.get(rp, "range_m", where, float, default=0.0, check=lambda v: v >= 0, msg="must be >= 0")
        amp_db = f.get(rp, "amplitude_db", where, float, default=0.0)
        ph = f.get(rp, "const_phase", where, float, default=0.0)
        if None not in (kind, rng, amp_db, ph):
            path = f.build(where, ScatteringPath, tau_int + 2 * rng / C0, 10 ** (amp_db / 20), ph, kind)
            if path is not None:
                paths.append(path)
    if raw_paths and not any(isinstance(rp, dict) and rp.get("kind") == "leakage" for rp in raw_paths):
        f.errors.append("scene.paths: at least one leakage path is required")

    n = f.section(s.get("phase_noise", {}), _NOISE, "scene.phase_noise")
    if "anchor_dbc_hz" in n and "residual_rms" in n:
        f.errors.append("scene.phase_noise: give only one of anchor_dbc_hz and residual_rms")
    anchor = _dbfs(f.get(n, "anchor_dbc_hz", "scene.phase_noise", float, default=None))
    residual = f.get(n, "residual_rms", "scene.phase_noise", float, default=None,
                     check=lambda v: 0 <= v < 1, msg="must lie in [0, 1) rad")
    offset = f.get(n, "anchor_offset", "scene.phase_noise", float, default=10e3)
    slope = f.get(n, "slope", "scene.phase_noise", float, default=-20.0)
    cutoff = n.get("cutoff")
    cutoff = math.inf if cutoff is None else f.get(n, "cutoff", "scene.phase_noise", float)
    thermal = s.get("thermal_noise_dbfs")
    if thermal is not None and (isinstance(thermal, bool) or not isinstance(thermal, (int, float))):
        f.errors.append(f"scene.thermal_noise_dbfs: expected float or null, got {thermal!r}")
        thermal = None
    thermal = _dbfs(thermal)

    scene = None
    noise = None
    if None not in (offset, slope, cutoff, seed) and anchor is not None:
        noise = f.build("scene.phase_noise", PhaseNoiseModel, anchor, offset, slope, cutoff, seed)
    if chirp is not None and noise is not None and paths and len(paths) == len(raw_paths) and not f.errors:
        scene = f.build("scene", RadarScene, chirp, tuple(paths), noise, thermal)
        if scene is not None and residual is not None and plan is not None:
            scene = f.build("scene.phase_noise", calibrate_residual_rms, scene, plan, residual)
    if scene is not None and plan is not None:
        n_block = block_length(scene, plan)
        m = 1 << (n_block.bit_length() - 1)
        if plan.nfft < m:
            f.errors.append(f"plan.nfft: {plan.nfft} is shorter than the {m} meaningful samples per chirp")
        if m % plan.n_factor or (n_block - m) % plan.n_factor:
            f.errors.append("plan: meaningful samples do not align with the decimation factor")
        for i, pth in enumerate(scene.paths):
            try:
                _check_zone(scene, pth, plan.oversampled_fs)
            except ValueError as exc:
                f.errors.append(f"scene.paths[{i}]: {exc}")

    if f.errors:
        raise ConfigError(f.errors)
    return ScenarioConfig(name, scene, plan, fspec, n_chirps, techniques, seed, out, freeze, convention,
                          json.loads(json.dumps(doc)))


def parse_config(text: str) -> ScenarioConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from None
    return config_from_dict(doc)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; choose from {', '.join(PRESETS)}"])
    return resources.files("fmcwleak").joinpath("presets", f"{name}.json").read_text()


def load_preset(name: str) -> ScenarioConfig:
    return parse_config(preset_text(name))


def with_overrides(doc: dict, **overrides) -> dict:
    """Copy of a scenario document with top-level keys replaced (``None`` values skipped)."""
    out = json.loads(json.dumps(doc))
    for k, v in overrides.items():
        if v is not None:
            out[k] = v
    return out


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    spectra: dict
    blocks: dict
    estimates: list
    summary: dict
    files: list


def _csv(spec: analysis.RangeSpectrum) -> str:
    rows = ["range_m,power_db"]
    rows += [f"{r:.9g},{p:.9g}" for r, p in zip(spec.range_axis, spec.power_db)]
    return "\n".join(rows) + "\n"


def _clean(obj):
    """Make a summary tree JSON-safe (numpy scalars, non-finite floats)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run_scenario(config: ScenarioConfig, output_dir: Optional[str] = None) -> ScenarioResult:
    """Simulate every chirp, down-convert with each technique, analyse and write artifacts.

    Artifacts go to ``output_dir`` (falling back to ``config.output_dir``);
    with neither set nothing is written.  Output is a pure function of the
    config, so equal configs give byte-identical files.
    """
    scene, plan, chirp = config.scene, config.plan, config.scene.chirp
    fspec = config.filter.halved() if config.filter_convention == "zero_phase" else config.filter
    lpf = design_butterworth_lowpass(fspec)
    report = validate_plan(plan, scene, config.filter, meaningful_count=config.meaningful_count)

    blocks = {t: [] for t in config.techniques}
    estimates = []
    frozen = None
    for i in range(config.n_chirps):
        blk = synthesize_if_block(scene, plan, i)
        if "common" in blocks:
            blocks["common"].append(common_downconvert(blk, plan, lpf))
        if "proposed" in blocks:
            est = frozen
            if est is None:
                est = estimate_leakage_tone(blk, plan)
                if config.freeze_estimate:
                    frozen = est
            estimates.append(est)
            blocks["proposed"].append(proposed_downconvert(blk, plan, lpf, estimate=est))

    spectra = {t: analysis.averaged_power_spectrum(b, chirp) for t, b in blocks.items()}

    leak = scene.dominant_leakage
    f_bl = scene.beat(leak)
    r_internal = float(range_of_beat(f_bl, chirp))
    r_max = float(range_of_beat(plan.base_fs / 2, chirp))

    targets = []
    for p in scene.targets:
        r_true = float(range_of_beat(chirp.slope * (p.delay - leak.delay), chirp))
        alias = analysis.predict_alias(r_true, r_internal, r_max) if r_true + r_internal <= 2 * r_max else None
        entry = {"range_m": r_true, "amplitude": p.amplitude,
                 "alias_prediction": alias.to_dict() if alias else "unsupported (folds more than once)",
                 "power_db": {}}
        if "proposed" in blocks:
            f_t = float(beat_of_range(r_true, chirp))
            entry["expected_range_m"] = {"proposed": r_true}
            entry["power_db"]["proposed"] = analysis.mean_tone_power_db(blocks["proposed"], f_t)
        if "common" in blocks:
            f_c = fold(plan.if_carrier + 0.0, plan.oversampled_fs)
            f_t = fold(fold(scene.if_frequency(p), plan.oversampled_fs) - f_c, plan.base_fs)
            f_l = fold(fold(scene.if_frequency(leak), plan.oversampled_fs) - f_c, plan.base_fs)
            entry.setdefault("expected_range_m", {})["common"] = float(range_of_beat(f_t, chirp))
            entry["power_db"]["common"] = analysis.mean_tone_power_db(blocks["common"], f_t, (0.0, f_l))
        targets.append(entry)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "scenario": {"name": config.name, "n_chirps": config.n_chirps, "techniques": list(config.techniques),
                     "seed": config.seed, "freeze_estimate": config.freeze_estimate,
                     "filter_convention": config.filter_convention},
        "scene": {
            "internal_delay_s": leak.delay,
            "leakage_range_m": r_internal,
            "max_range_m": r_max,
            "usable_max_range_common_m": r_max - r_internal,
            "phase_noise_anchor_dbc_hz": scene.noise.psd_anchor_dbc_hz,
            "leakage_residual_rms_rad": leakage_residual_rms(scene, plan),
            "block_length": config.block_length,
            "meaningful_count": config.meaningful_count,
        },
        "plan": {"base_fs": plan.base_fs, "n_factor": plan.n_factor, "band_index": plan.band_index,
                 "oversampled_fs": plan.oversampled_fs, "if_carrier": plan.if_carrier, "nfft": plan.nfft},
        "filter": {"order": fspec.order, "cutoff_hz": lpf.cutoff, "dc_gain": lpf.dc_gain,
                   "max_pole_radius": float(lpf.pole_radii.max())},
        "validation": report.to_dict(),
        "leakage_estimates": [dict(chirp=i, **e.to_dict()) for i, e in enumerate(estimates)],
        "spectra": {t: {"csv": f"spectrum_{t}.csv", "bins": len(s.power_db),
                        "ac_power_db": analysis.ac_power_db(blocks[t]),
                        "peaks": [q.to_dict() for q in analysis.detect_peaks(s)]}
                    for t, s in spectra.items()},
        "targets": targets,
    }
    if len(spectra) == 2:
        nf = analysis.noise_floor_difference(spectra["common"], spectra["proposed"],
                                             support_max=r_max - r_internal)
        summary["noise_floor"] = nf.to_dict()
    summary = _clean(summary)

    files = []
    out = output_dir if output_dir is not None else config.output_dir
    if out is not None:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        for t, s in spectra.items():
            path = d / f"spectrum_{t}.csv"
            with open(path, "w", newline="\n") as fh:
                fh.write(_csv(s))
            files.append(path)
        path = d / "summary.json"
        with open(path, "w", newline="\n") as fh:
            fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        files.append(path)
    return ScenarioResult(config, spectra, blocks, estimates, summary, files)
