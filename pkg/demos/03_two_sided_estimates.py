"""Two-sided operator-norm estimates against the criterion on a few sweep instances.

The full 24-instance sweep is ``focklab verify``; this script runs four
instances, one per regime and criterion.

Run: python3 demos/03_two_sided_estimates.py
"""

from focklab.harness import SweepConfig, default_sweep, verify_theorem

cfg = default_sweep()
picked = [i for i in cfg.instances if i.instance_id in ("A-00-G", "A-01-H", "B-00-H", "B-01-G")]
report = verify_theorem(SweepConfig(picked, seed=cfg.seed))

print(f"{'instance':9s} {'theorem':10s} {'criterion':>10s} {'lower':>10s} {'upper':>10s} {'low/crit':>9s} {'up/crit':>9s}")
for r in report.records:
    print(f"{r['instance_id']:9s} {r['theorem']:10s} {r['criterion']:10.4f} {r['lower']:10.4f} {r['upper']:10.4f}"
          f" {r['ratio_low']:9.3f} {r['ratio_high']:9.3f}  {r['verdict']}")
print(f"\nband observed: [{report.band.ratio_low:.3f}, {report.band.ratio_high:.3f}], all passed: {report.passed}")
