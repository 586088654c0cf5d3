"""Criterion functionals G, H and the Carleson functional, with lattice surrogates.

For a measure ``mu`` and a weight ``w`` the criterion functions are ratios

    mu(B_r(z))^gamma / w(B_r(z))^eta

with ``(gamma, eta) = (1/t, 1/p - 1/q)`` for the Berezin-type criterion
``G``, ``(1, 1/p - 1/q)`` for the Toeplitz-type criterion ``H`` and, for the
Carleson criterion ``CM``, ``(1, q/p)`` when ``p <= q`` or ``(1, 1)`` when
``p > q``.  Suprema are searched on a fine grid of centres and compared with
the cube-lattice maxima.  Integrals use the matching cube sums.
"""

from dataclasses import dataclass, field
import math
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from focklab.errors import InvalidArgumentError, InvalidWeightError
from focklab.measures import Measure
from focklab.numerics import QuadratureGrid, as_points, lattice_points, tail_radius
from focklab.spaces import EntireFunction, FockParams, log_fock_quasi_norm, norm_grid
from focklab.weights import Weight

__all__ = [
    "CriterionReport",
    "CriterionSpec",
    "SupResult",
    "criterion_report",
    "criterion_value",
    "decay_test",
    "integral_criterion",
    "product_carleson_check",
    "sup_criterion",
]

KINDS = ("G", "H", "CM")
BOUNDED_SENTINEL = 1e6
DEFAULT_SHELLS = (4.0, 6.0, 8.0, 10.0)
# Default step of the centre grid for suprema and direct integrals.
FINE_STEP = 0.1
# Direct integrals stop enlarging once the outer shell adds less than this.
_INTEGRAL_TOL = 1e-6
_INTEGRAL_R_CAP = 32.0


@dataclass(frozen=True)
class CriterionSpec:
    """Which criterion to evaluate, for which measure and weight.

    ``step`` is the quadrature step for density and weight ball masses
    (the package default when ``None``); ``r`` the ball radius.
    """

    kind: str
    p: float
    q: float
    weight: Weight
    measure: Measure
    t: Optional[float] = None
    r: float = 1.0
    step: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"criterion kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("p", "q", "r"):
            v = getattr(self, name)
            if not v > 0:
                raise InvalidArgumentError(f"CriterionSpec.{name} must be positive, got {v}")
        if self.kind == "G":
            if self.t is None or not self.t > 0:
                raise InvalidArgumentError(f"CriterionSpec.t must be positive for kind G, got {self.t}")
        elif self.t is not None:
            raise InvalidArgumentError(f"CriterionSpec.t is only meaningful for kind G (got kind {self.kind})")
        if self.weight.n != self.measure.n:
            raise InvalidArgumentError("weight and measure dimensions differ")

    @property
    def n(self):
        return self.weight.n

    @property
    def exponents(self):
        """``(gamma, eta)`` of the ratio ``mu(B)^gamma / w(B)^eta``."""
        if self.kind == "G":
            return 1.0 / self.t, 1.0 / self.p - 1.0 / self.q
        if self.kind == "H":
            return 1.0, 1.0 / self.p - 1.0 / self.q
        return 1.0, (self.q / self.p if self.p <= self.q else 1.0)

    @property
    def integral_exponent(self):
        """Lebesgue exponent of the integral criterion (requires p > q)."""
        if not self.p > self.q:
            raise InvalidArgumentError("the integral criterion needs p > q")
        if self.kind == "CM":
            return self.p / (self.p - self.q)
        return self.p * self.q / (self.p - self.q)

    def scaled(self, lam):
        """The same spec with the measure replaced by ``lam * mu``."""
        return CriterionSpec(self.kind, self.p, self.q, self.weight, self.measure.scaled(lam),
                             self.t, self.r, self.step)


def _log_ratio(spec, log_mu, log_w):
    gamma, eta = spec.exponents
    with np.errstate(invalid="ignore"):
        out = gamma * log_mu - eta * log_w
    return np.where(np.isneginf(log_mu), -np.inf, out)


def log_criterion_values(spec, centers):
    """Log of the criterion function at each row of ``centers`` (``-inf`` where mu(B) = 0)."""
    centers = as_points(centers, spec.n)
    with np.errstate(divide="ignore"):
        log_mu = np.log(spec.measure.ball_masses(centers, spec.r, spec.step))
    log_w = spec.weight.log_ball_masses(centers, spec.r, spec.step)
    if not np.all(np.isfinite(log_w)):
        i = int(np.argmax(~np.isfinite(log_w)))
        raise InvalidWeightError(f"weight ball mass is zero or infinite at {centers[i].tolist()}")
    return _log_ratio(spec, log_mu, log_w)


def criterion_value(spec, z):
    """``mu(B_r(z))^gamma / w(B_r(z))^eta``; scalar for a single point."""
    single = np.ndim(z) == 1
    vals = np.exp(log_criterion_values(spec, z))
    return float(vals[0]) if single else vals


def log_lattice_values(spec, nus):
    """Log of ``mu(Q_1(nu))^gamma / w(Q_1(nu))^eta`` on lattice points ``nus``."""
    nus = as_points(nus, spec.n)
    with np.errstate(divide="ignore"):
        log_mu = np.log(spec.measure.cube_masses(nus, 1.0, spec.step))
    log_w = spec.weight.log_cube_masses(nus, 1.0, spec.step)
    return _log_ratio(spec, log_mu, log_w)


# -- suprema -----------------------------------------------------------------


@dataclass
class SupResult:
    value: float
    location: np.ndarray
    lattice_value: float
    lattice_location: np.ndarray

    def __iter__(self):
        # unpacks as (value, location) like the plain tuple form
        return iter((self.value, self.location))


def default_sup_radius(mu):
    if math.isfinite(mu.support_radius):
        return mu.support_radius + 2.0
    return 10.0


def sup_centers(spec, R_sup, fine_step):
    """Fine grid of centres within ``R_sup`` plus atom sites and midpoints of close atom pairs."""
    pts = [lattice_points(fine_step, R_sup, spec.n)]
    atoms = spec.measure.atoms
    if len(atoms):
        near = atoms[np.linalg.norm(atoms, axis=1) <= R_sup]
        pts.append(near)
        if len(near) > 1:
            pairs = cKDTree(near).query_pairs(2 * spec.r, output_type="ndarray")
            if len(pairs):
                pts.append((near[pairs[:, 0]] + near[pairs[:, 1]]) / 2)
    return np.vstack(pts)


def sup_criterion(spec, R_sup=None, fine_step=FINE_STEP):
    """Maximum of the criterion over fine centres in ``B_{R_sup}(0)`` and over unit lattice cubes."""
    R_sup = default_sup_radius(spec.measure) if R_sup is None else R_sup
    centers = sup_centers(spec, R_sup, fine_step)
    L = log_criterion_values(spec, centers)
    i = int(np.argmax(L))
    nus = lattice_points(1.0, R_sup, spec.n)
    LL = log_lattice_values(spec, nus)
    j = int(np.argmax(LL))
    return SupResult(float(np.exp(L[i])), centers[i].copy(), float(np.exp(LL[j])), nus[j].copy())


# -- integrals ---------------------------------------------------------------


def _log_integrand(spec, centers):
    s = spec.integral_exponent
    L = s * log_criterion_values(spec, centers)
    if spec.kind == "CM":
        L = L + spec.weight.log(centers)
    return L


def _log_lattice_terms(spec, nus):
    s = spec.integral_exponent
    L = s * log_lattice_values(spec, nus)
    if spec.kind == "CM":
        # int_Q w dv stands in for the pointwise weight
        L = L + spec.weight.log_cube_masses(nus, 1.0, spec.step)
    return L


def _settled_log_sum(log_terms_for, R0, shell, cap):
    """Sum exp(terms) over a growing ball; ``inf`` if the outer shell never becomes negligible."""
    R = R0
    while True:
        pts, L = log_terms_for(R)
        if not np.any(np.isfinite(L)):
            return -math.inf
        M = float(np.max(L))
        e = np.exp(L - M)
        total = float(np.sum(e))
        outer = float(np.sum(e[np.linalg.norm(pts, axis=1) > R - shell]))
        if outer <= _INTEGRAL_TOL * total:
            return M + math.log(total)
        if R >= cap:
            return math.inf
        R = min(2 * R, cap)


def _integral_start_radius(spec):
    mu = spec.measure
    if math.isfinite(mu.support_radius):
        return mu.support_radius + spec.r + 2.0
    if mu.density_decay:
        return tail_radius(mu.density_decay, spec.n, 1e-12) + spec.r + 2.0
    return 8.0


def integral_criterion(spec, grid=None, fine_step=FINE_STEP, R_cap=_INTEGRAL_R_CAP):
    """``(direct, lattice)`` values of the integral criterion (p > q).

    ``direct`` is ``||criterion||_{L^s}`` by quadrature over centres
    (weighted by ``w dv`` for kind CM), ``lattice`` the matching cube sum to
    the power ``1/s``.  Both enlarge their domain until the outer shell is
    negligible; either returns ``inf`` if that never happens below ``R_cap``.
    A given ``grid`` fixes the direct domain.
    """
    s = spec.integral_exponent
    if spec.measure.is_zero:
        return 0.0, 0.0

    if grid is not None:
        L = _log_integrand(spec, grid.nodes)
        M = float(np.max(L))
        direct = -math.inf if not math.isfinite(M) else M + math.log(np.sum(np.exp(L - M)) * grid.cell_volume)
    else:
        def direct_terms(R):
            g = QuadratureGrid(fine_step, R, spec.n)
            return g.nodes, _log_integrand(spec, g.nodes) + math.log(g.cell_volume)
        direct = _settled_log_sum(direct_terms, _integral_start_radius(spec), 1.0, R_cap)

    def lattice_terms(R):
        if spec.measure.density is None:
            nus = spec.measure.occupied_cubes(1.0)
            nus = nus[np.linalg.norm(nus, axis=1) <= R]
        else:
            nus = lattice_points(1.0, R, spec.n)
        if len(nus) == 0:
            return np.zeros((1, 2 * spec.n)), np.array([-np.inf])
        return nus, _log_lattice_terms(spec, nus)

    if spec.measure.density is None:
        lat = _settled_log_sum(lattice_terms, spec.measure.support_radius + 1.0, 0.0, math.inf)
    else:
        lat = _settled_log_sum(lattice_terms, _integral_start_radius(spec), 1.0, R_cap)
    return _pow_exp(direct, 1.0 / s), _pow_exp(lat, 1.0 / s)


def _pow_exp(log_value, power):
    if log_value == math.inf:
        return math.inf
    return math.exp(log_value * power)


# -- decay -------------------------------------------------------------------


def shell_profile(spec, shell_radii=DEFAULT_SHELLS, fine_step=FINE_STEP):
    """Sup of the criterion over each annulus ``r_i <= |z| < r_{i+1}``.

    The last annulus has the same width as the one before it.
    """
    radii = np.asarray(shell_radii, dtype=float)
    if len(radii) < 2 or np.any(np.diff(radii) <= 0):
        raise InvalidArgumentError("shell radii must be increasing with at least two entries")
    edges = np.append(radii, radii[-1] + (radii[-1] - radii[-2]))
    centers = lattice_points(fine_step, edges[-1], spec.n)
    rr = np.linalg.norm(centers, axis=1)
    keep = rr >= edges[0]
    centers, rr = centers[keep], rr[keep]
    vals = np.exp(log_criterion_values(spec, centers))
    profile = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (rr >= lo) & (rr < hi)
        profile.append((float(lo), float(np.max(vals[sel])) if sel.any() else 0.0))
    return profile


def _non_increasing(values, rel=1e-9):
    return all(b <= a * (1 + rel) + 1e-300 for a, b in zip(values[:-1], values[1:]))


def default_shells(spec):
    """Shell radii {4, 6, 8, 10}, pushed outwards past a bounded support.

    Shells that sit inside the support would measure the shape of the
    measure rather than its behaviour at infinity.
    """
    mu = spec.measure
    shift = 0.0
    if math.isfinite(mu.support_radius):
        shift = max(0.0, mu.support_radius + spec.r - DEFAULT_SHELLS[0])
    return tuple(r + shift for r in DEFAULT_SHELLS)


def decay_test(spec, shell_radii=None, eps=None, fine_step=FINE_STEP, global_sup=None):
    """Shell-sup test for ``criterion(z) -> 0``.

    Vanishing means the last shell sup is below ``eps`` and the last three
    shell sups do not increase.  The default ``eps`` is half the global sup
    and the default shells come from :func:`default_shells`.
    Returns ``(vanishing, profile)``.
    """
    shell_radii = default_shells(spec) if shell_radii is None else shell_radii
    profile = shell_profile(spec, shell_radii, fine_step)
    sups = [v for _, v in profile]
    if eps is None:
        g = sup_criterion(spec, fine_step=fine_step).value if global_sup is None else global_sup
        eps = 0.5 * g
    if sups[-1] == 0.0:
        return True, profile
    vanishing = sups[-1] < eps and _non_increasing(sups[-3:])
    return bool(vanishing), profile


# -- report ------------------------------------------------------------------


@dataclass
class CriterionReport:
    kind: str
    sup_value: float
    sup_location: list
    lattice_sup_value: float
    integral_value: Optional[float]
    lattice_sum_value: Optional[float]
    decay_profile: list
    verdicts: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "kind": self.kind,
            "sup_value": self.sup_value,
            "sup_location": list(self.sup_location),
            "lattice_sup_value": self.lattice_sup_value,
            "integral_value": self.integral_value,
            "lattice_sum_value": self.lattice_sum_value,
            "decay_profile": [list(x) for x in self.decay_profile],
            "verdicts": dict(self.verdicts),
        }


def criterion_report(spec, R_sup=None, fine_step=FINE_STEP, shell_radii=None, eps=None):
    """All criterion quantities with bounded / vanishing / integrable verdicts.

    The integral criterion is only evaluated when ``p > q``.
    """
    sup = sup_criterion(spec, R_sup, fine_step)
    vanishing, profile = decay_test(spec, shell_radii, eps, fine_step, global_sup=sup.value)
    bounded = sup.value < BOUNDED_SENTINEL and _non_increasing([v for _, v in profile])
    direct = lattice = None
    verdicts = {"bounded": bool(bounded), "vanishing": bool(vanishing)}
    if spec.p > spec.q:
        direct, lattice = integral_criterion(spec, fine_step=fine_step)
        verdicts["integrable"] = bool(math.isfinite(direct))
    return CriterionReport(spec.kind, sup.value, sup.location.tolist(), sup.lattice_value,
                           direct, lattice, profile, verdicts)


# -- products ----------------------------------------------------------------


def product_carleson_check(mu, w, lam, factors, functions, grid=None, norm_h=None):
    """Ratio of ``int prod |f_j|^{q_j} exp(-q_j alpha_j |z|^2/2) dmu`` to ``prod ||f_j||^{q_j}``.

    ``factors`` lists ``(p_j, q_j, alpha_j)``; ``lam`` must equal the sum of
    ``q_j / p_j``.  At most two factors are supported.  Returns ``nan`` when
    the denominator vanishes.  ``grid`` discretises a density part of ``mu``.
    """
    if not 1 <= len(factors) <= 2:
        raise InvalidArgumentError("product check supports one or two factors")
    if len(functions) != len(factors):
        raise InvalidArgumentError("need one function per factor")
    total = sum(q / p for p, q, _ in factors)
    if not math.isclose(total, lam, rel_tol=1e-12, abs_tol=1e-12):
        raise InvalidArgumentError(f"lambda = {lam} differs from sum q_j/p_j = {total}")
    log_den = 0.0
    for (p, q, a), f in zip(factors, functions):
        fp = FockParams(p, a, w)
        ln = log_fock_quasi_norm(f, fp, norm_grid(f, fp, norm_h))
        log_den += q * ln
    if not math.isfinite(log_den):
        return math.nan
    if mu.is_zero:
        return 0.0
    if mu.density is None:
        atoms, masses = mu.atoms, mu.masses
    else:
        if grid is None:
            peaks = np.vstack([f.peak_hint(a)[0] for (_, _, a), f in zip(factors, functions)] + [np.zeros((1, 2 * mu.n))])
            center = (peaks.min(axis=0) + peaks.max(axis=0)) / 2
            spread = float(np.max(np.linalg.norm(peaks - center, axis=1))) + 2.0
            rate = min(q * a / 2 for _, q, a in factors)
            grid = QuadratureGrid(0.05 if mu.n == 1 else 0.15, spread + tail_radius(rate, mu.n, 1e-12), mu.n, center)
        atoms, masses = mu.discretize(grid.center, grid.R, grid.h)
    if len(atoms) == 0:
        return 0.0
    L = np.log(masses)
    r2 = np.sum(atoms**2, axis=1)
    for (p, q, a), f in zip(factors, functions):
        L = L + q * f.log_abs(atoms) - q * a / 2 * r2
    M = float(np.max(L))
    if not math.isfinite(M):
        return 0.0
    log_num = M + math.log(float(np.sum(np.exp(L - M))))
    return math.exp(log_num - log_den)
