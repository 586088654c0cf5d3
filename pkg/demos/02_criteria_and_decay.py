"""Criterion functionals, their lattice surrogates and the decay test.

Run: python3 demos/02_criteria_and_decay.py
"""

import math

from focklab.criteria import CriterionSpec, criterion_report, decay_test
from focklab.measures import Measure
from focklab.weights import Weight

measures = {
    "random cloud": Measure.random_cloud(20, 3.0, seed=7),
    "gaussian lattice": Measure.lattice("gauss", 0.5, 12.0),
    "power lattice": Measure.lattice("power", 3.0, 12.0),
    "gaussian density": Measure.gaussian_density(0.5),
}
weights = {"constant": Weight.constant(), "exp-linear": Weight.exp_linear([0.5, 0.0])}

# %% Bounded regime (p <= q): supremum of the criterion and of its lattice version
print("p=1, q=2, t=1: sup over ball centres vs sup over unit cubes")
for mname, mu in measures.items():
    for wname, w in weights.items():
        rep = criterion_report(CriterionSpec("G", 1.0, 2.0, w, mu, t=1.0))
        print(f"  {mname:17s} {wname:10s} sup {rep.sup_value:8.4f}  lattice {rep.lattice_sup_value:8.4f}"
              f"  vanishing={rep.verdicts['vanishing']}")

# %% Integral regime (p > q): L^s norm of the criterion and the cube sum
print("\np=2, q=1, t=2: integral criterion vs cube sum")
for mname, mu in measures.items():
    rep = criterion_report(CriterionSpec("G", 2.0, 1.0, Weight.constant(), mu, t=2.0))
    print(f"  {mname:17s} direct {rep.integral_value:8.4f}  lattice {rep.lattice_sum_value:8.4f}")

# %% Lebesgue measure never decays
vanishing, profile = decay_test(CriterionSpec("G", 1.0, 1.0, Weight.constant(), Measure.lebesgue(), t=1.0),
                                fine_step=0.25)
print(f"\nLebesgue shell sups {[round(v, 4) for _, v in profile]} (pi = {math.pi:.4f}); vanishing={vanishing}")
