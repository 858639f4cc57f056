"""Why the IF carrier sits at a quarter of the oversampled rate.

Validates the two shipped plans, then breaks one by sliding the carrier and
shows the sum-term diagnosis, and finally asks for N = 2.
"""
# %%
from dataclasses import replace

from fmcwleak.planning import make_plan, validate_plan
from fmcwleak.scenario import load_preset

for name in ("experiment_a", "experiment_b"):
    cfg = load_preset(name)
    rep = validate_plan(cfg.plan, cfg.scene, cfg.filter, meaningful_count=cfg.meaningful_count)
    print(f"{name}: carrier {cfg.plan.if_carrier / 1e6:.3f} MHz at {cfg.plan.oversampled_fs / 1e6:.0f} MHz, "
          f"leakage sum-term folds to {rep.sum_term_folded_hz / 1e6:.3f} MHz -> "
          f"{'pass' if rep.passed else 'FAIL'}")

# %% carrier 0.7 MHz above the quarter point
cfg = load_preset("experiment_a")
chirp = replace(cfg.scene.chirp, f_tx=cfg.scene.chirp.f_tx + 0.7e6)
rep = validate_plan(cfg.plan, replace(cfg.scene, chirp=chirp), cfg.filter)
print("\nmoved carrier:")
for msg in rep.failures:
    print("  " + msg)

# %% too little oversampling
try:
    make_plan(2.5e6, n_factor=2)
except ValueError as exc:
    print(f"\nN = 2: {exc}")
