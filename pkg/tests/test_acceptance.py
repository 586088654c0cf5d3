"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; each test prints its line
even when output capture is on.
"""

import itertools
import json
import math
import os
from pathlib import Path
import subprocess
import sys
import time

import numpy as np
import pytest

from focklab.config import MINIMAL_EXAMPLE, emit_config, parse_config
from focklab.criteria import CriterionSpec, decay_test, integral_criterion, sup_criterion
from focklab.harness import (
    DEFAULT_BAND,
    DEFAULT_C_SUFF,
    SWEEP_MEASURES,
    SWEEP_REGIMES,
    SWEEP_WEIGHTS,
    Instance,
    SweepConfig,
    default_sweep,
    run_instance,
    verify_theorem,
)
from focklab.measures import EXPECTED_VANISHING, Measure, measure_from_spec
from focklab.numerics import QuadratureGrid, integrate, lattice_points, point
from focklab.operators import BerezinParams, berezin_apply, fock_projection, toeplitz_apply, toeplitz_damped
from focklab.report import report_from_json
from focklab.spaces import EntireFunction, FockParams, fock_quasi_norm
from focklab.weights import Weight, a_infinity_verdict, ap_restricted_constant, weight_from_spec

FIXTURES = Path(__file__).parent / "fixtures"


def announce(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="module")
def sweep():
    start = time.perf_counter()
    rep = verify_theorem(default_sweep())
    return rep, time.perf_counter() - start


# -- 1. Gaussian oracles ----------------------------------------------------


def test_criterion_1_gaussian_oracles(capsys):
    start = time.perf_counter()
    h = 0.05
    errors = {}

    grid = QuadratureGrid(h, 6.0)
    errors["integral of exp(-|z|^2)"] = integrate(lambda u: np.exp(-np.sum(u**2, axis=1)), grid) / math.pi - 1

    u = point(1)
    fp = FockParams(2.0, 1.0, Weight.constant())
    exact = math.exp(0.5) * math.sqrt(math.pi)
    errors["kernel norm"] = fock_quasi_norm(EntireFunction.kernel(u), fp) / exact - 1

    w, z = point(1), point(1j)
    K = EntireFunction.kernel(w)
    errors["Toeplitz on Lebesgue"] = abs(toeplitz_apply(Measure.lebesgue(), K, 1.0, z, step=h) / (math.pi * K(z)) - 1)
    errors["projection of a kernel"] = abs(fock_projection(K, 1.0, z, step=h) / K(z) - 1)

    bp = BerezinParams(1.0, 1.0, 1.0)
    for zz in (point(0), point(2)):
        val = berezin_apply(Measure.lebesgue(), EntireFunction.constant(), bp, zz, step=h)
        errors[f"Berezin on Lebesgue at |z|={abs(zz[0]):g}"] = val / (math.pi * math.exp(-float(zz @ zz) / 4)) - 1

    elapsed = time.perf_counter() - start
    worst = max(abs(e) for e in errors.values())
    ok = worst <= 1e-4 and elapsed < 60
    announce(capsys, 1, ok, f"max relative error {worst:.2e} (tol 1e-4), {elapsed:.1f} s (limit 60 s)")
    assert ok, errors


# -- 2. exact inequalities --------------------------------------------------


def random_sample(rng):
    kind = rng.integers(3)
    if kind == 0:
        mu = Measure.random_cloud(int(rng.integers(1, 30)), float(rng.uniform(0.5, 4)), seed=int(rng.integers(2**31)))
    elif kind == 1:
        mu = Measure.lattice("gauss", float(rng.uniform(0.2, 1.0)), 6.0)
    else:
        mu = Measure.gaussian_density(float(rng.uniform(0.3, 2.0)))
    f = EntireFunction.zero()
    for _ in range(int(rng.integers(1, 4))):
        f = f + EntireFunction.kernel(rng.uniform(-2, 2, 2), coef=complex(*rng.normal(size=2)))
    if rng.random() < 0.5:
        f = f + EntireFunction.monomial([int(rng.integers(0, 4))], complex(*rng.normal(size=2)))
    return mu, f, rng.uniform(-4, 4, 2), float(rng.uniform(0.3, 2.0))


def test_criterion_2_exact_inequalities(capsys, sweep):
    rng = np.random.default_rng(2024)
    worst_excess = -math.inf
    for _ in range(1000):
        mu, f, z, alpha = random_sample(rng)
        grid = None
        if mu.has_density:
            grid = QuadratureGrid(0.2, 8.0)
        lhs = abs(toeplitz_damped(mu, f, alpha, z, grid=grid))
        rhs = berezin_apply(mu, f, BerezinParams(1.0, alpha, alpha), z, grid=grid)
        worst_excess = max(worst_excess, lhs - rhs - 1e-8 - 1e-12 * rhs)
    domination = worst_excess <= 0

    rep, _ = sweep
    c = DEFAULT_C_SUFF[1]
    sandwich = max(r["sandwich_max"] for r in rep.records)
    ok = domination and sandwich <= c
    announce(capsys, 2, ok, f"domination on 1000 samples (max excess {worst_excess:.1e}); "
                            f"sandwich max LHS/RHS {sandwich:.3f} <= C_suff {c:g} on {len(rep.records)} instances")
    assert ok


# -- 3. exact scaling -------------------------------------------------------


def test_criterion_3_exact_scaling(capsys):
    worst = 0.0
    verdicts_ok = True
    mu = Measure.random_cloud(15, 3.0, seed=7)
    w = Weight.exp_linear([0.5, 0.0])
    f = EntireFunction.kernel(point(0.5 + 0.5j)) + EntireFunction.monomial([2], 0.3)
    zs = np.random.default_rng(1).uniform(-3, 3, (20, 2))
    for t in (0.5, 1.0, 2.0):
        bp = BerezinParams(t, 1.0, 1.0)
        base = berezin_apply(mu, f, bp, zs)
        g = sup_criterion(CriterionSpec("G", 1.0, 2.0, w, mu, t=t), R_sup=5.0, fine_step=0.2).value
        for lam in (1e-3, 1.0, 1e3):
            s = berezin_apply(mu.scaled(lam), f, bp, zs) / base
            worst = max(worst, float(np.max(np.abs(s / lam ** (1 / t) - 1))))
            gl = sup_criterion(CriterionSpec("G", 1.0, 2.0, w, mu.scaled(lam), t=t), R_sup=5.0, fine_step=0.2).value
            worst = max(worst, abs(gl / g / lam ** (1 / t) - 1))
    H = CriterionSpec("H", 2.0, 1.0, w, mu)
    h0 = integral_criterion(H)
    for lam in (1e-3, 1.0, 1e3):
        hl = integral_criterion(H.scaled(lam))
        worst = max(worst, abs(hl[0] / h0[0] / lam - 1), abs(hl[1] / h0[1] / lam - 1))

    inst = default_sweep().instances[3]  # lattice measure with the constant weight
    records = []
    for lam in (1e-3, 1.0, 1e3):
        m = dict(inst.measure, scale=lam)
        records.append(run_instance(Instance(inst.instance_id, inst.kind, m, inst.weight, inst.p, inst.q, inst.t,
                                             inst.alpha, inst.beta, families=inst.families)))
    for r in records:
        verdicts_ok &= (r["verdict"], r["vanishing"]) == (records[1]["verdict"], records[1]["vanishing"])
        for key in ("ratio_low", "ratio_high"):
            worst = max(worst, abs(r[key] / records[1][key] - 1))
    ok = worst <= 1e-12 and verdicts_ok
    announce(capsys, 3, ok, f"max relative deviation from exact scaling {worst:.1e} (tol 1e-12); "
                            f"verdicts invariant for lambda in 1e-3, 1, 1e3: {verdicts_ok}")
    assert ok


# -- 4. discretization band -------------------------------------------------


def lattice_to_direct(spec, h):
    if spec.p <= spec.q:
        res = sup_criterion(spec, fine_step=h)
        return res.lattice_value / res.value
    direct, lattice = integral_criterion(spec, fine_step=h, R_cap=16.0)
    return lattice / direct


def test_criterion_4_discretization_band(capsys):
    fixture = json.loads((FIXTURES / "discretization_band.json").read_text())
    lo, hi = fixture["band"]
    h1, h2 = fixture["steps"]
    ratios, drifts = [], []
    for m, wspec in itertools.product(SWEEP_MEASURES, SWEEP_WEIGHTS):
        mu, w = measure_from_spec(m), weight_from_spec(wspec)
        for p, q, t, _, _ in SWEEP_REGIMES:
            coarse = lattice_to_direct(CriterionSpec("G", p, q, w, mu, t=t, step=h1), h1)
            fine = lattice_to_direct(CriterionSpec("G", p, q, w, mu, t=t, step=h2), h2)
            ratios += [coarse, fine]
            drifts.append(abs(fine / coarse - 1))
    in_band = all(lo <= r <= hi for r in ratios)
    max_drift = max(drifts)
    ok = in_band and max_drift <= fixture["max_drift"]
    announce(capsys, 4, ok, f"12 pairs x 2 regimes: lattice/direct in [{min(ratios):.3f}, {max(ratios):.3f}] "
                            f"(band [{lo}, {hi}]), max drift h->h/2 {max_drift:.2%} (limit 5%)")
    assert ok


# -- 5. theorem-verification sweep -----------------------------------------


def test_criterion_5_sweep(capsys, sweep):
    rep, elapsed = sweep
    lo, hi = DEFAULT_BAND
    in_band = all(lo <= r["ratio_low"] <= hi and lo <= r["ratio_high"] <= hi for r in rep.records)
    decay_ok = all(r["vanishing"] == r["expected_vanishing"] for r in rep.records)
    lebesgue = decay_test(CriterionSpec("G", 1.0, 1.0, Weight.constant(), Measure.lebesgue(), t=1.0),
                          fine_step=0.25)[0]
    cover = {(r["p"] <= r["q"], r["kind"], r["measure_kind"], r["weight_kind"]) for r in rep.records}
    ok = (len(rep.records) == 24 and in_band and decay_ok and lebesgue is EXPECTED_VANISHING["lebesgue"]
          and rep.passed and len(cover) == 24)
    threads = os.environ.get("FOCKLAB_THREADS", "1")
    announce(capsys, 5, ok, f"{len(rep.records)} instances, ratios in [{rep.band.ratio_low:.3f}, "
                            f"{rep.band.ratio_high:.3f}] (band [{lo}, {hi}]), decay verdicts match: {decay_ok}, "
                            f"Lebesgue vanishing={lebesgue}; {elapsed:.0f} s on {threads} thread(s)")
    assert ok, rep.failures


# -- 6. weight classes ------------------------------------------------------


def test_criterion_6_weight_classes(capsys):
    centers = lattice_points(1.0, 4.0, 1)
    one = ap_restricted_constant(Weight.constant(), 2.0, 1.0, centers).value
    exact = (2 * math.sinh(0.5)) ** 2
    res = ap_restricted_constant(Weight.exp_linear([1.0, 0.0]), 2.0, 1.0, centers)
    spread = float(np.max(res.per_center) - np.min(res.per_center))
    growth_flagged = not a_infinity_verdict(Weight.radial_power_gauss(0.0, -1.0))[0]
    ok = abs(one - 1) <= 1e-6 and abs(res.value - exact) <= 1e-3 and spread <= 1e-3 and growth_flagged
    announce(capsys, 6, ok, f"A_2(1) = {one:.9f}; A_2(e^Re z) = {res.value:.6f} vs {exact:.6f} "
                            f"(spread over {len(centers)} centres {spread:.1e}); e^|z|^2 flagged: {growth_flagged}")
    assert ok


# -- 7. CLI contract --------------------------------------------------------


def run_cli(args, threads="1"):
    env = dict(os.environ, FOCKLAB_THREADS=threads)
    return subprocess.run([sys.executable, "-m", "focklab", *args], capture_output=True, text=True, env=env)


def test_criterion_7_cli_contract(capsys, tmp_path):
    checks = {}
    text = emit_config(default_sweep())
    checks["config round trip"] = emit_config(parse_config(text)) == text

    cfg = default_sweep()
    small = SweepConfig([cfg.instances[i] for i in (0, 1, 12, 13)], seed=11)
    path = tmp_path / "small.ini"
    path.write_text(emit_config(small))
    one = run_cli(["verify", "--config", str(path), "--quiet"], "1")
    four = run_cli(["verify", "--config", str(path), "--quiet"], "4")
    checks["exit 0"] = one.returncode == 0 and four.returncode == 0
    checks["report round trip"] = report_from_json(one.stdout).to_json() == one.stdout
    r1, r4 = json.loads(one.stdout)["records"], json.loads(four.stdout)["records"]
    checks["thread determinism"] = [r["verdict"] for r in r1] == [r["verdict"] for r in r4] and all(
        math.isclose(a[k], b[k], rel_tol=1e-12) for a, b in zip(r1, r4) for k in ("lower", "upper", "criterion"))

    minimal = tmp_path / "min.ini"
    minimal.write_text(MINIMAL_EXAMPLE.replace("seed = 0", "seed = 0\nband_low = 10\nband_high = 20"))
    checks["exit 1"] = run_cli(["verify", "--config", str(minimal)]).returncode == 1
    bad = tmp_path / "bad.ini"
    bad.write_text(MINIMAL_EXAMPLE.replace("t = 1\n", "t = -1\n"))
    checks["exit 2"] = run_cli(["verify", "--config", str(bad)]).returncode == 2
    div = tmp_path / "div.ini"
    div.write_text(MINIMAL_EXAMPLE.replace("kind = constant\nc = 1", "kind = radial-power-gauss\ns = 0\neps = -1"))
    checks["exit 3"] = run_cli(["verify", "--config", str(div)]).returncode == 3

    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    announce(capsys, 7, ok, "config and report round trips byte-identical, exit codes 0/1/2/3, "
                            "1 vs 4 threads identical" + (f"; failed: {failed}" if failed else ""))
    assert ok, checks
