import math

import pytest

from fmcwleak.dsp_core import FilterSpec, design_butterworth_lowpass
from fmcwleak.planning import make_plan
from fmcwleak.waveform import C0, ChirpParams, PhaseNoiseModel, RadarScene, ScatteringPath

TAU_INT = 2 * 12.89 / C0  # 12.89 m leakage range


def chirp_a(**kw):
    args = dict(f_tx=14.35e9 + 2.5e6, f_rx=14.35e9, bandwidth=150e6, sweep_period=860e-6)
    args.update(kw)
    return ChirpParams(**args)


def chirp_b(**kw):
    args = dict(f_tx=14.35e9 + 0.5e6, f_rx=14.35e9, bandwidth=150e6, sweep_period=300e-6)
    args.update(kw)
    return ChirpParams(**args)


def spec_a():
    return FilterSpec(11, 1.875e6, 2.5e6, 1.0, 30.0, 10e6)


def spec_b():
    return FilterSpec(11, 0.375e6, 0.5e6, 1.0, 30.0, 2e6)


def leakage(delay=TAU_INT, amplitude=1.0, phase=0.0):
    return ScatteringPath(delay, amplitude, phase, "leakage")


def target(range_m, amplitude_db=-30.0, phase=0.0, tau_int=TAU_INT):
    return ScatteringPath(tau_int + 2 * range_m / C0, 10 ** (amplitude_db / 20), phase, "target")


def scene(chirp, *paths, noise=None, thermal=-math.inf):
    return RadarScene(chirp, tuple(paths), noise or PhaseNoiseModel(), thermal)


@pytest.fixture(scope="session")
def plan_a():
    return make_plan(2.5e6, 4, 0, 1 << 21)


@pytest.fixture(scope="session")
def plan_b():
    return make_plan(0.5e6, 4, 0, 1 << 17)


@pytest.fixture(scope="session")
def lpf_a():
    return design_butterworth_lowpass(spec_a())


@pytest.fixture(scope="session")
def lpf_b():
    return design_butterworth_lowpass(spec_b())


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LOG = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail, seconds in sorted(ACCEPTANCE_LOG):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {num}: {title} -- {detail} [{seconds:.1f} s]")
