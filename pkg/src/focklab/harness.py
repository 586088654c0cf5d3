"""Two-sided norm estimates for the Berezin and Toeplitz operators, and sweeps.

For each instance the harness computes

* a lower bound ``max_f ||S f|| / ||f||`` over a test family of normalised
  kernels (plus Rademacher sign combinations when ``p > q``),
* an upper estimate from the lattice sum ``RHS(f)`` that dominates
  ``int (S f)^q w dv`` up to a constant ``C_suff``, and
* the criterion value (sup of G or H for ``p <= q``, its ``L^{pq/(p-q)}``
  norm for ``p > q``),

then checks that ``lower / criterion`` and ``upper / criterion`` sit inside
a fixed band and that ``LHS(f) <= C_suff * RHS(f)`` for every test function.
Toeplitz instances bound ``|T f| e^{-alpha|z|^2/2}`` by ``S^{1,alpha,alpha} f``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import math
import os

import numpy as np

from focklab.criteria import CriterionSpec, criterion_report
from focklab.errors import InvalidArgumentError
from focklab.measures import EXPECTED_VANISHING, measure_from_spec
from focklab.numerics import as_points, ball_integral, lattice_points
from focklab.operators import BerezinParams, s_target_norm, t_target_norm
from focklab.spaces import (
    EntireFunction,
    FockParams,
    _log_integrand,
    kernel_log_norms,
    log_fock_quasi_norm,
    norm_grid,
    normalized_kernel,
    rademacher_combination,
)
from focklab.weights import weight_from_spec

__all__ = [
    "DEFAULT_BAND",
    "DEFAULT_C_SUFF",
    "EquivalenceBand",
    "GridPolicy",
    "Instance",
    "SweepConfig",
    "SweepReport",
    "carleson_upper_bound",
    "default_sweep",
    "estimate_s_norm_lower",
    "run_instance",
    "suff_upper_bound",
    "verify_theorem",
]

# Calibrated on the default sweep (largest observed LHS/RHS times a safety
# factor) and frozen; see tests/test_harness.py for the regression check.
DEFAULT_C_SUFF = {1: 10.0, 2: 10.0}
DEFAULT_BAND = (0.02, 50.0)
THEOREMS = ("main1-sup", "main1-int", "main2-sup", "main2-int", "CM")


@dataclass(frozen=True)
class GridPolicy:
    """Quadrature steps used by one instance.

    ``h`` is the outer step for norms (package default when ``None``),
    ``inner_step`` the density discretisation step, ``fine_step`` the centre
    grid for criteria and ``mass_step`` the step for density and weight
    ball masses.
    """

    h: float = 0.1
    inner_step: float = 0.2
    fine_step: float = 0.1
    mass_step: float = 0.1


@dataclass(frozen=True)
class Families:
    """Test-family sizes: kernel centres on Z^{2n} within ``kernel_radius``,
    ``draws`` Rademacher sign patterns on centres within ``rademacher_radius``,
    and the ``extra`` lattice cells with the largest criterion terms."""

    kernel_radius: float = 4.0
    draws: int = 64
    rademacher_radius: float = 2.0
    extra: int = 4


@dataclass(frozen=True)
class Instance:
    instance_id: str
    kind: str  # "G", "H" or "CM"
    measure: dict
    weight: dict
    p: float
    q: float
    t: float
    alpha: float
    beta: float
    n: int = 1
    grid: GridPolicy = field(default_factory=GridPolicy)
    families: Families = field(default_factory=Families)
    seed: int = 0

    @property
    def theorem(self):
        if self.kind == "CM":
            return "CM"
        main = "main1" if self.kind == "G" else "main2"
        return f"{main}-{'sup' if self.p <= self.q else 'int'}"


@dataclass
class SweepConfig:
    instances: list
    seed: int = 0
    c_suff: dict = field(default_factory=lambda: dict(DEFAULT_C_SUFF))
    band: tuple = DEFAULT_BAND
    theorem: str = "all"


@dataclass
class EquivalenceBand:
    ratio_low: float
    ratio_high: float
    count: int
    ratios: list
    sandwich_by_weight: dict = field(default_factory=dict)

    def to_dict(self):
        return {"ratio_low": self.ratio_low, "ratio_high": self.ratio_high,
                "count": self.count, "ratios": [list(r) for r in self.ratios],
                "sandwich_by_weight": dict(self.sandwich_by_weight)}


@dataclass
class SweepReport:
    config: SweepConfig
    records: list
    band: EquivalenceBand
    passed: bool
    failures: list


# -- single-function bounds -----------------------------------------------------


def _log_fhat(f, fp, nus, radius, grid=None):
    """``log int_{B_radius(nu)} |f|^p e^{-p alpha |u|^2/2} w dv`` for each lattice point nu."""
    nus = as_points(nus, f.n)
    g = norm_grid(f, fp) if grid is None else grid
    aligned = abs(1.0 / g.h - round(1.0 / g.h)) < 1e-9
    if f.n == 1 and aligned:
        L = _log_integrand(f, fp, g.box_points)
        M = float(np.max(L))
        e = np.exp(L - M)
        # cells outside the truncation ball hold negligible mass by construction
        sums = g.ball_sums(e, nus, radius)
        with np.errstate(divide="ignore"):
            return np.log(np.maximum(sums, 0.0)) + M
    return ball_integral(lambda pts: _log_integrand(f, fp, pts), nus, radius, g.h, f.n, log=True)


def _lse(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0 or not np.any(np.isfinite(x)):
        return -math.inf
    m = float(np.max(x))
    return m + math.log(float(np.sum(np.exp(x - m))))


def _measure_cells(mu, R=None):
    """Lattice cells that carry mass (all cells within R for a density)."""
    if mu.density is None:
        return mu.occupied_cubes(1.0)
    if R is None:
        R = mu.support_radius + 2.0 if math.isfinite(mu.support_radius) else 12.0
    return mu.occupied_cubes(1.0, R)


def _cell_radius_for(mu, f, fp):
    if math.isfinite(mu.support_radius):
        return mu.support_radius + 2.0
    g = norm_grid(f, fp)
    return float(np.linalg.norm(g.center)) + g.R + 2 * f.n


def log_suff_upper_bound(mu, f, p, q, t, alpha, w, grid=None, mass_step=None):
    """Log of the lattice sum that dominates ``int (S^{t,alpha,beta}_mu f)^q w dv``."""
    fp = FockParams(p, alpha, w)
    n = f.n
    if mu.is_zero or f.is_zero:
        return -math.inf
    nus = _measure_cells(mu, _cell_radius_for(mu, f, fp))
    with np.errstate(divide="ignore"):
        lmu = np.log(mu.cube_masses(nus, 1.0, mass_step))
    keep = np.isfinite(lmu)
    nus, lmu = nus[keep], lmu[keep]
    if len(nus) == 0:
        return -math.inf
    lw = w.log_cube_masses(nus, 1.0, mass_step)
    lf = _log_fhat(f, fp, nus, 2.0 * n, grid)
    terms = (q / t) * lmu - (q / p - 1.0) * lw + (q / p) * lf
    return _lse(terms)


def suff_upper_bound(mu, f, p, q, t, alpha, w, grid=None, mass_step=None):
    """``sum_nu mu(Q_1(nu))^{q/t} / w(Q_1(nu))^{q/p-1} (int_{B_{2n}(nu)} |f|^p e^{-p alpha|u|^2/2} w dv)^{q/p}``."""
    return math.exp(log_suff_upper_bound(mu, f, p, q, t, alpha, w, grid, mass_step))


def log_carleson_upper_bound(mu, f, p, q, alpha, w, grid=None, mass_step=None):
    """Log of ``sum_nu mu(Q_1(nu)) / w(Q_1(nu))^{q/p} (int_{B_{2n}(nu)} |f|^p ...)^{q/p}``.

    This dominates ``int |f|^q e^{-q alpha|z|^2/2} dmu`` up to a constant, by the
    local mean-value bound for ``|f|^p e^{-p alpha |.|^2/2}``.
    """
    fp = FockParams(p, alpha, w)
    if mu.is_zero or f.is_zero:
        return -math.inf
    nus = _measure_cells(mu, _cell_radius_for(mu, f, fp))
    with np.errstate(divide="ignore"):
        lmu = np.log(mu.cube_masses(nus, 1.0, mass_step))
    keep = np.isfinite(lmu)
    nus, lmu = nus[keep], lmu[keep]
    if len(nus) == 0:
        return -math.inf
    lw = w.log_cube_masses(nus, 1.0, mass_step)
    lf = _log_fhat(f, fp, nus, 2.0 * f.n, grid)
    return _lse(lmu - (q / p) * lw + (q / p) * lf)


def carleson_upper_bound(mu, f, p, q, alpha, w, grid=None, mass_step=None):
    return math.exp(log_carleson_upper_bound(mu, f, p, q, alpha, w, grid, mass_step))


def _log_embedding(mu, f, q, alpha, inner_step=None):
    """``log int |f|^q e^{-q alpha |z|^2/2} dmu`` (density parts discretised)."""
    if mu.is_zero or f.is_zero:
        return -math.inf
    from focklab.operators import density_grid

    if mu.density is None:
        atoms, masses = mu.atoms, mu.masses
    else:
        g = density_grid(mu, f, alpha, q, None, inner_step)
        atoms, masses = mu.discretize(g.center, g.R, g.h)
    L = q * f.log_abs(atoms) - q * alpha / 2 * np.sum(atoms**2, axis=1) + np.log(masses)
    return _lse(L)


# -- test families -----------------------------------------------------------


def kernel_family(fp, kernel_radius=4.0, extra_centers=None, mass_step=None):
    """Normalised kernels ``f_nu`` at lattice points within ``kernel_radius`` plus extra centres."""
    nus = lattice_points(1.0, kernel_radius, fp.n)
    if extra_centers is not None and len(extra_centers):
        nus = np.unique(np.vstack([nus, as_points(extra_centers, fp.n)]), axis=0)
    return [(f"kernel@{list(map(float, nu))}", normalized_kernel(nu, fp, 1.0, mass_step)) for nu in nus]


def rademacher_family(fp, nus, coeffs, draws, rng, h=None):
    """``draws`` random-sign combinations of the normalised kernels at ``nus``."""
    log_norms = kernel_log_norms(nus, fp, h)
    out = []
    for k in range(draws):
        signs = rng.choice(np.array([-1.0, 1.0]), size=len(nus))
        out.append((f"rademacher#{k}", rademacher_combination(nus, coeffs, signs, fp, log_norms)))
    return out


def estimate_s_norm_lower(mu, bp, p, q, w, family, h=None, inner_step=None):
    """``max_f ||S f||_{L^q(w dv)} / ||f||_{F^p_{alpha,w}}`` over ``family``.

    ``family`` is a list of entire functions or ``(label, function)`` pairs.
    Returns 0 for the zero measure.  Raises if every test norm vanishes.
    """
    fp = FockParams(p, bp.alpha, w)
    best = -math.inf
    any_nonzero = False
    for item in family:
        f = item[1] if isinstance(item, tuple) else item
        ln = log_fock_quasi_norm(f, fp, norm_grid(f, fp, h))
        if not math.isfinite(ln):
            continue
        any_nonzero = True
        s = s_target_norm(mu, f, bp, q, w, h=h, inner_step=inner_step)
        if s > 0:
            best = max(best, math.log(s) - ln)
    if not any_nonzero:
        raise InvalidArgumentError("every test function has zero norm")
    return math.exp(best)


# -- instances ---------------------------------------------------------------


def _top_cells(spec, count):
    from focklab.criteria import log_lattice_values

    if count <= 0:
        return np.zeros((0, 2 * spec.n))
    nus = _measure_cells(spec.measure)
    if len(nus) == 0:
        return nus
    vals = log_lattice_values(spec, nus)
    order = np.argsort(-vals, kind="stable")[:count]
    return nus[order]


def instance_rng(config_seed, index):
    return np.random.default_rng(np.random.SeedSequence([int(config_seed), int(index)]))


def run_instance(inst, c_suff=None, band=DEFAULT_BAND, rng=None, R_sup=None):
    """Evaluate one instance; returns a plain-data record."""
    c_suff = DEFAULT_C_SUFF.get(inst.n, 10.0) if c_suff is None else c_suff
    rng = np.random.default_rng(inst.seed) if rng is None else rng
    mu = measure_from_spec(inst.measure, inst.n)
    w = weight_from_spec(inst.weight, inst.n)
    gp, fam = inst.grid, inst.families
    fp = FockParams(inst.p, inst.alpha, w)
    spec = CriterionSpec(inst.kind, inst.p, inst.q, w, mu, inst.t if inst.kind == "G" else None,
                         1.0, gp.mass_step)
    crit = criterion_report(spec, R_sup, fine_step=gp.fine_step)
    criterion = crit.sup_value if inst.p <= inst.q else crit.integral_value

    functions = kernel_family(fp, fam.kernel_radius, _top_cells(spec, fam.extra), gp.mass_step)
    if inst.p > inst.q and fam.draws > 0:
        from focklab.criteria import log_lattice_values

        nus = lattice_points(1.0, fam.rademacher_radius, inst.n)
        a = np.exp(inst.q * log_lattice_values(spec, nus))
        coeffs = a ** (1.0 / (inst.p - inst.q))
        if not np.any(coeffs > 0):
            coeffs = np.ones(len(nus))
        functions += rademacher_family(fp, nus, coeffs, fam.draws, rng, gp.h)

    if inst.kind == "G":
        bp = BerezinParams(inst.t, inst.alpha, inst.beta)
    else:
        bp = BerezinParams(1.0, inst.alpha, inst.alpha)
    log_lower = log_upper = -math.inf
    worst = 0.0
    for label, f in functions:
        g = norm_grid(f, fp, gp.h)
        ln = log_fock_quasi_norm(f, fp, g)
        if inst.kind == "G":
            lhs = s_target_norm(mu, f, bp, inst.q, w, h=gp.h, inner_step=gp.inner_step)
            log_lhs_q = inst.q * math.log(lhs) if lhs > 0 else -math.inf
            log_rhs = log_suff_upper_bound(mu, f, inst.p, inst.q, bp.t, inst.alpha, w, g, gp.mass_step)
            log_lo = log_lhs_q / inst.q
        elif inst.kind == "H":
            tn = t_target_norm(mu, f, inst.alpha, inst.q, w, h=gp.h, inner_step=gp.inner_step)
            lhs = s_target_norm(mu, f, bp, inst.q, w, h=gp.h, inner_step=gp.inner_step)
            log_lhs_q = inst.q * math.log(lhs) if lhs > 0 else -math.inf
            log_rhs = log_suff_upper_bound(mu, f, inst.p, inst.q, 1.0, inst.alpha, w, g, gp.mass_step)
            log_lo = math.log(tn) if tn > 0 else -math.inf
        else:
            log_lhs_q = _log_embedding(mu, f, inst.q, inst.alpha, gp.inner_step)
            log_rhs = log_carleson_upper_bound(mu, f, inst.p, inst.q, inst.alpha, w, g, gp.mass_step)
            log_lo = log_lhs_q / inst.q
        log_lower = max(log_lower, log_lo - ln)
        if math.isfinite(log_rhs):
            log_upper = max(log_upper, (math.log(c_suff) + log_rhs) / inst.q - ln)
        if math.isfinite(log_lhs_q):
            worst = max(worst, math.exp(log_lhs_q - log_rhs) if math.isfinite(log_rhs) else math.inf)

    lower = math.exp(log_lower)
    upper = math.exp(log_upper)
    if criterion and math.isfinite(criterion) and criterion > 0:
        ratio_low, ratio_high = lower / criterion, upper / criterion
    else:
        ratio_low = ratio_high = math.nan
    expected = EXPECTED_VANISHING.get(mu.family.split("+")[0])
    in_band = band[0] <= ratio_low <= band[1] and band[0] <= ratio_high <= band[1]
    sandwich = worst <= c_suff * (1 + 1e-9)
    decay_ok = expected is None or crit.verdicts["vanishing"] == expected
    verdict = "pass" if (in_band and sandwich and decay_ok) else "fail"
    return {
        "instance_id": inst.instance_id,
        "theorem": inst.theorem,
        "kind": inst.kind,
        "p": inst.p,
        "q": inst.q,
        "t": inst.t,
        "alpha": inst.alpha,
        "beta": inst.beta,
        "weight_kind": w.kind,
        "measure_kind": mu.family,
        "criterion": criterion,
        "lower": lower,
        "upper": upper,
        "ratio_low": ratio_low,
        "ratio_high": ratio_high,
        "verdict": verdict,
        "sandwich_max": worst,
        "test_functions": len(functions),
        "vanishing": crit.verdicts["vanishing"],
        "expected_vanishing": expected,
        "criterion_report": crit.to_dict(),
    }


def _threads():
    try:
        return max(1, int(os.environ.get("FOCKLAB_THREADS", "1")))
    except ValueError:
        return 1


def _check_theorem(inst, theorem):
    if theorem in (None, "all"):
        return
    if theorem not in THEOREMS:
        raise InvalidArgumentError(f"unknown theorem {theorem!r}; expected one of {THEOREMS + ('all',)}")
    if inst.theorem != theorem:
        raise InvalidArgumentError(
            f"instance {inst.instance_id} (kind {inst.kind}, p={inst.p}, q={inst.q}) does not match theorem {theorem}")


def verify_theorem(config, theorem=None, threads=None, R_sup=None):
    """Run every instance of ``config`` and check the equivalence band.

    ``theorem`` (default: the config's) restricts the run to one regime;
    instances from another regime are a configuration error.
    """
    theorem = config.theorem if theorem is None else theorem
    for inst in config.instances:
        _check_theorem(inst, theorem)
    threads = _threads() if threads is None else threads

    def job(i):
        inst = config.instances[i]
        return run_instance(inst, config.c_suff.get(inst.n), config.band, instance_rng(config.seed, i), R_sup)

    idx = range(len(config.instances))
    if threads > 1 and len(config.instances) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(job, idx))
    else:
        records = [job(i) for i in idx]
    ratios = [(r["instance_id"], r["ratio_low"], r["ratio_high"]) for r in records]
    finite = [x for _, lo, hi in ratios for x in (lo, hi) if math.isfinite(x)]
    by_weight = {}
    for r in records:
        by_weight[r["weight_kind"]] = max(by_weight.get(r["weight_kind"], 0.0), r["sandwich_max"])
    band = EquivalenceBand(min(finite) if finite else math.nan, max(finite) if finite else math.nan,
                           len(records), ratios, by_weight)
    failures = [{"instance_id": r["instance_id"], "ratio_low": r["ratio_low"], "ratio_high": r["ratio_high"],
                 "sandwich_max": r["sandwich_max"], "vanishing": r["vanishing"],
                 "expected_vanishing": r["expected_vanishing"]}
                for r in records if r["verdict"] != "pass"]
    return SweepReport(config, records, band, not failures, failures)


# -- default sweep -------------------------------------------------------------

SWEEP_MEASURES = (
    {"kind": "cloud", "count": 20, "radius": 3.0, "seed": 7},
    {"kind": "lattice", "profile": "gauss", "rate": 0.5, "radius": 12.0},
    {"kind": "lattice", "profile": "power", "rate": 3.0, "radius": 12.0},
    {"kind": "gauss-density", "sigma": 0.5},
)
SWEEP_WEIGHTS = (
    {"kind": "constant", "c": 1.0},
    {"kind": "exp-linear", "a": [0.5, 0.0]},
    {"kind": "radial-power-gauss", "s": 1.0, "eps": 0.0},
)
# (p, q, t, alpha, beta)
SWEEP_REGIMES = ((1.0, 2.0, 1.0, 1.0, 1.0), (2.0, 1.0, 2.0, 1.0, 1.0))


def default_sweep(seed=0, grid=None, families=None):
    """The 24-instance sweep: 4 measures x 3 weights x 2 regimes.

    G and H alternate over the (measure, weight) table so that each regime
    sees both criteria on every measure family and every weight.
    """
    grid = GridPolicy() if grid is None else grid
    families = Families() if families is None else families
    instances = []
    for r_i, (p, q, t, a, b) in enumerate(SWEEP_REGIMES):
        for m_i, m in enumerate(SWEEP_MEASURES):
            for w_i, w in enumerate(SWEEP_WEIGHTS):
                kind = "G" if (m_i + w_i + r_i) % 2 == 0 else "H"
                tt, bb = (t, b) if kind == "G" else (1.0, a)
                iid = f"{'A' if r_i == 0 else 'B'}-{m_i}{w_i}-{kind}"
                instances.append(Instance(iid, kind, dict(m), dict(w), p, q, tt, a, bb, 1, grid, families))
    return SweepConfig(instances, seed)


def calibrate_c_suff(config, threads=None):
    """Largest observed ``LHS / RHS`` over all instances and test functions of ``config``."""
    probe = replace(config, c_suff={k: 1.0 for k in (1, 2)}, band=(0.0, math.inf))
    rep = verify_theorem(probe, threads=threads)
    return max(r["sandwich_max"] for r in rep.records)
