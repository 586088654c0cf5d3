import math
from dataclasses import replace

import numpy as np
import pytest

from focklab.errors import InvalidArgumentError
from focklab.harness import (
    DEFAULT_C_SUFF,
    Families,
    GridPolicy,
    Instance,
    SweepConfig,
    default_sweep,
    estimate_s_norm_lower,
    instance_rng,
    kernel_family,
    run_instance,
    suff_upper_bound,
    verify_theorem,
)
from focklab.measures import Measure
from focklab.numerics import point
from focklab.operators import BerezinParams
from focklab.spaces import EntireFunction, FockParams, normalized_kernel
from focklab.weights import Weight

ONE = Weight.constant()
DIRAC = {"kind": "dirac", "location": [0.0, 0.0], "mass": 1.0}
SMALL_FAMILIES = Families(kernel_radius=2.0, draws=8, rademacher_radius=1.0, extra=2)


def dirac_instance(kind="G", p=1.0, q=1.0, iid="delta"):
    return Instance(iid, kind, dict(DIRAC), {"kind": "constant", "c": 1.0}, p, q, 1.0, 1.0, 1.0,
                    families=SMALL_FAMILIES)


def test_suff_upper_bound_single_atom():
    val = suff_upper_bound(Measure.dirac(point(0)), EntireFunction.constant(), 1.0, 1.0, 1.0, 1.0, ONE)
    assert val == pytest.approx(2 * math.pi * (1 - math.exp(-2)), rel=1e-3)
    assert suff_upper_bound(Measure.zero(), EntireFunction.constant(), 1.0, 1.0, 1.0, 1.0, ONE) == 0.0


def test_lower_estimate_single_atom():
    fp = FockParams(1.0, 1.0, ONE)
    f0 = normalized_kernel(point(0), fp)
    # S f0 = e^{-|z|^2/2} / pi and ||f0|| = 2, so the ratio for f0 is exactly 1
    lower = estimate_s_norm_lower(Measure.dirac(point(0)), BerezinParams(1.0, 1.0, 1.0), 1.0, 1.0, ONE, [f0])
    assert lower == pytest.approx(1.0, rel=1e-6)
    family = kernel_family(fp, 2.0)
    assert estimate_s_norm_lower(Measure.dirac(point(0)), BerezinParams(1.0, 1.0, 1.0), 1.0, 1.0, ONE,
                                 family) >= lower * (1 - 1e-9)
    with pytest.raises(InvalidArgumentError):
        estimate_s_norm_lower(Measure.dirac(point(0)), BerezinParams(1.0, 1.0, 1.0), 1.0, 1.0, ONE,
                              [EntireFunction.zero()])


@pytest.mark.parametrize("kind,p,q", [("G", 1.0, 1.0), ("H", 1.0, 2.0), ("G", 2.0, 1.0), ("CM", 1.0, 2.0)])
def test_single_atom_instances_pass(kind, p, q):
    rec = run_instance(dirac_instance(kind, p, q))
    assert rec["verdict"] == "pass", rec
    assert rec["sandwich_max"] <= DEFAULT_C_SUFF[1]
    assert rec["lower"] <= rec["upper"]


def test_single_atom_ratios_against_closed_forms():
    rec = run_instance(dirac_instance())
    assert rec["criterion"] == 1.0
    assert rec["lower"] == pytest.approx(1.0, rel=1e-3)


def test_empty_sweep_is_valid():
    rep = verify_theorem(SweepConfig([]))
    assert rep.passed and rep.records == [] and rep.band.count == 0


def test_theorem_mismatch_is_rejected():
    cfg = SweepConfig([dirac_instance("G", 2.0, 1.0)], theorem="main1-sup")
    with pytest.raises(InvalidArgumentError):
        verify_theorem(cfg)


def test_band_violation_is_reported():
    cfg = SweepConfig([dirac_instance()], band=(10.0, 20.0))
    rep = verify_theorem(cfg)
    assert not rep.passed
    assert rep.failures[0]["instance_id"] == "delta"


def test_instance_rng_is_deterministic_and_distinct():
    a = instance_rng(3, 1).integers(0, 2**31, 5)
    b = instance_rng(3, 1).integers(0, 2**31, 5)
    c = instance_rng(3, 2).integers(0, 2**31, 5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_default_sweep_layout():
    cfg = default_sweep()
    assert len(cfg.instances) == 24
    ids = [i.instance_id for i in cfg.instances]
    assert len(set(ids)) == 24
    regimes = {(i.p <= i.q, i.kind) for i in cfg.instances}
    assert regimes == {(True, "G"), (True, "H"), (False, "G"), (False, "H")}
    assert {i.measure["kind"] for i in cfg.instances} == {"cloud", "lattice", "gauss-density"}
    assert {i.weight["kind"] for i in cfg.instances} == {"constant", "exp-linear", "radial-power-gauss"}


def test_threads_do_not_change_results():
    cfg = SweepConfig([dirac_instance(iid="a"), replace(dirac_instance("H", 2.0, 1.0), instance_id="b")], seed=5)
    r1 = verify_theorem(cfg, threads=1).records
    r2 = verify_theorem(cfg, threads=2).records
    assert [r["verdict"] for r in r1] == [r["verdict"] for r in r2]
    for a, b in zip(r1, r2):
        assert a["lower"] == pytest.approx(b["lower"], rel=1e-12)
        assert a["upper"] == pytest.approx(b["upper"], rel=1e-12)


def test_grid_policy_is_used():
    inst = replace(dirac_instance(), grid=GridPolicy(h=0.05, inner_step=0.1, fine_step=0.05, mass_step=0.05))
    assert run_instance(inst)["verdict"] == "pass"
