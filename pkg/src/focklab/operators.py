"""Berezin-type, Toeplitz-type and projection operators, and their target norms.

For a measure ``mu`` and an entire function ``f``:

* ``S f(z) = (int exp(-beta|z-u|^2/2) |f(u)|^t exp(-alpha t |u|^2/2) dmu(u))^(1/t)``
* ``T f(z) = int f(u) exp(alpha <z,u> - alpha |u|^2) dmu(u)``
* ``P g(z) = (alpha/pi)^n int g(u) exp(alpha <z,u>) exp(-alpha |u|^2) dv(u)``

A density part of ``mu`` is replaced by midpoint atoms on a quadrature grid,
after which both ``S`` and ``T`` are finite sums of Gaussians.  Every sum
is taken in log form.  In dimension one the sums over a tensor grid of
``z`` factor into one matrix product.  That product drives the target-norm
integrals.
"""

from dataclasses import dataclass
import math

import numpy as np

from focklab.errors import DivergenceError, InvalidArgumentError, NumericalDomainError
from focklab.measures import Measure
from focklab.numerics import QuadratureGrid, as_points, chunked, default_step, tail_radius
from focklab.spaces import EntireFunction, _perp
from focklab.weights import Weight

__all__ = [
    "BerezinParams",
    "berezin_apply",
    "berezin_log_power",
    "fock_projection",
    "s_target_norm",
    "t_target_norm",
    "toeplitz_apply",
    "toeplitz_damped",
]

# Sources whose log-contribution is this far below the largest are dropped
# from target-norm sums (relative size e^{-80}).
_PRUNE = 80.0
# Sources this far below the largest no longer widen the outer grid.
_SPREAD_CUT = 25.0
# Share of a target-norm integral tolerated in the outer unit shell.
_SHELL_TOL = 1e-6
_MAX_DOUBLINGS = 3


@dataclass(frozen=True)
class BerezinParams:
    t: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("t", "alpha", "beta"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise InvalidArgumentError(f"BerezinParams.{name} must be a positive real, got {v!r}")


# -- sources ------------------------------------------------------------------


def density_grid(mu, f, alpha, t=1.0, zs=None, step=None, rel_tol=1e-12):
    """Quadrature grid for the density part of ``mu`` when applied to ``f``.

    The grid covers the peaks of ``|f|^t exp(-alpha t |u|^2/2)`` and, when
    given, the evaluation points ``zs``.
    """
    peaks, mono_r = f.peak_hint(alpha)
    pts = [peaks, np.zeros((1, 2 * mu.n))]
    if zs is not None:
        pts.append(as_points(zs, mu.n))
    allp = np.vstack(pts)
    center = (allp.min(axis=0) + allp.max(axis=0)) / 2
    spread = float(np.max(np.linalg.norm(allp - center, axis=1))) + mono_r
    R = spread + tail_radius(alpha * t / 2, mu.n, rel_tol)
    if math.isfinite(mu.support_radius):
        R = min(R, np.linalg.norm(center) + mu.support_radius + 1.0)
    return QuadratureGrid(default_step(mu.n) if step is None else step, R, mu.n, center)


def _sources(mu, f, alpha, t, zs=None, grid=None, step=None):
    if mu.density is None:
        return mu.atoms, mu.masses
    g = density_grid(mu, f, alpha, t, zs, step) if grid is None else grid
    return mu.discretize(g.center, g.R, g.h)


def _berezin_log_weights(f, atoms, masses, t, alpha):
    """log of |f(a)|^t exp(-alpha t |a|^2/2) m_a per source."""
    if len(atoms) == 0:
        return np.zeros(0)
    return t * f.log_abs(atoms) - alpha * t / 2 * np.sum(atoms**2, axis=1) + np.log(masses)


def _toeplitz_log_coefs(f, atoms, masses, alpha):
    """Complex log of f(a) exp(-alpha |a|^2/2) m_a per source."""
    if len(atoms) == 0:
        return np.zeros(0, dtype=complex)
    return f.log_eval(atoms) - alpha / 2 * np.sum(atoms**2, axis=1) + np.log(masses)


def _lse_gauss(z, atoms, logc, rate, phase_rate=None):
    """log sum_a exp(logc_a - rate |z - a|^2 [+ i phase_rate Im<z,a>]) per row of z."""
    complex_mode = phase_rate is not None
    out = np.full(len(z), -np.inf + (0j if complex_mode else 0.0))
    if len(atoms) == 0:
        return out
    a2 = np.sum(atoms**2, axis=1)
    per = max(1, 2_000_000 // len(atoms))
    for sl in chunked(len(z), per):
        zz = z[sl]
        d2 = np.sum(zz**2, axis=1)[:, None] - 2 * zz @ atoms.T + a2[None, :]
        e = logc[None, :] - rate * np.maximum(d2, 0.0)
        if complex_mode:
            e = e + 1j * phase_rate * (zz @ _perp(atoms).T)
        m = np.max(e.real, axis=1)
        m = np.where(np.isfinite(m), m, 0.0)
        s = np.sum(np.exp(e - m[:, None]), axis=1)
        with np.errstate(divide="ignore"):
            if complex_mode:
                out[sl] = m + np.log(np.abs(s)) + 1j * np.angle(s)
            else:
                out[sl] = m + np.log(s)
    return out


# -- pointwise operators -----------------------------------------------------


def berezin_log_power(mu, f, bp, z, grid=None, step=None):
    """``log (S f(z))^t`` at each row of ``z``; ``-inf`` where S f vanishes."""
    z = as_points(z, mu.n)
    atoms, masses = _sources(mu, f, bp.alpha, bp.t, z, grid, step)
    lg = _berezin_log_weights(f, atoms, masses, bp.t, bp.alpha)
    ok = np.isfinite(lg)
    if np.any(np.isnan(lg)):
        raise NumericalDomainError("Berezin integrand is not a number")
    return _lse_gauss(z, atoms[ok], lg[ok], bp.beta / 2)


def berezin_apply(mu, f, bp, z, grid=None, step=None):
    """``S^{t,alpha,beta}_mu f`` at ``z`` (a scalar for one point, else an array).

    ``grid`` is the quadrature grid used for the density part of ``mu``.
    """
    single = np.ndim(z) == 1
    vals = np.exp(berezin_log_power(mu, f, bp, z, grid, step) / bp.t)
    return float(vals[0]) if single else vals


def toeplitz_damped(mu, f, alpha, z, grid=None, step=None):
    """``T^alpha_mu f(z) * exp(-alpha |z|^2 / 2)``, which stays bounded in z."""
    single = np.ndim(z) == 1
    z = as_points(z, mu.n)
    atoms, masses = _sources(mu, f, alpha, 1.0, z, grid, step)
    lc = _toeplitz_log_coefs(f, atoms, masses, alpha)
    ok = np.isfinite(lc.real)
    vals = np.exp(_lse_gauss(z, atoms[ok], lc[ok], alpha / 2, phase_rate=alpha))
    return complex(vals[0]) if single else vals


def toeplitz_apply(mu, f, alpha, z, grid=None, step=None):
    """``T^alpha_mu f`` at ``z``."""
    single = np.ndim(z) == 1
    z = as_points(z, mu.n)
    atoms, masses = _sources(mu, f, alpha, 1.0, z, grid, step)
    lc = _toeplitz_log_coefs(f, atoms, masses, alpha)
    ok = np.isfinite(lc.real)
    lg = _lse_gauss(z, atoms[ok], lc[ok], alpha / 2, phase_rate=alpha) + alpha / 2 * np.sum(z**2, axis=1)
    big = lg.real > 709.0
    if big.any():
        i = int(np.argmax(big))
        raise NumericalDomainError(f"T f overflows at {z[i].tolist()}", z[i])
    vals = np.exp(lg)
    return complex(vals[0]) if single else vals


def fock_projection(g, alpha, z, grid=None, spread=2.0, step=None):
    """``P_alpha g(z)`` by quadrature; ``g`` maps ``(N, 2n)`` points to complex values.

    Without an explicit grid each ``z`` gets its own grid centred at ``z/2``,
    where ``|exp(alpha <z,u> - alpha |u|^2)|`` peaks; ``spread`` widens it to
    absorb the growth of ``g``.
    """
    single = np.ndim(z) == 1
    z = as_points(z)
    n = z.shape[1] // 2
    out = np.empty(len(z), dtype=complex)
    for i, zi in enumerate(z):
        gr = grid
        if gr is None:
            gr = QuadratureGrid(default_step(n) if step is None else step,
                                spread + tail_radius(alpha, n, 1e-12), n, zi / 2)
        u = gr.nodes
        vals = np.asarray(g(u), dtype=complex)
        # Im<z,u> = z.perp(u) = -u.perp(z)
        expo = alpha * (u @ zi) - alpha * np.sum(u**2, axis=1) - 1j * alpha * (u @ _perp(zi[None, :])[0])
        terms = vals * np.exp(expo)
        bad = ~np.isfinite(terms)
        if bad.any():
            j = int(np.argmax(bad))
            raise NumericalDomainError(f"projection integrand is not finite at {u[j].tolist()}", u[j])
        out[i] = (alpha / math.pi) ** n * np.sum(terms) * gr.cell_volume
    return complex(out[0]) if single else out


# -- target norms ------------------------------------------------------------


def _outer_grid(atoms, logc, power, rate, n, weight, h, rel_tol=1e-10):
    keep = power * (logc - logc.max()) >= -_SPREAD_CUT
    core = atoms[keep]
    lo, hi = core.min(axis=0), core.max(axis=0)
    center = (lo + hi) / 2
    spread = float(np.max(np.linalg.norm(core - center, axis=1)))
    drift = weight.drift(rate)
    if not math.isfinite(drift):
        drift = 0.0
    R = spread + drift + tail_radius(rate, n, rel_tol)
    return QuadratureGrid(default_step(n) if h is None else h, R, n, center)


def _separable_factors(axis_x, axis_y, atoms, rate, phase_rate=None):
    ax, ay = atoms[:, 0], atoms[:, 1]
    X = -rate * (axis_x[:, None] - ax[None, :]) ** 2
    Y = -rate * (axis_y[:, None] - ay[None, :]) ** 2
    if phase_rate is None:
        return np.exp(X), np.exp(Y)
    # Im<z,a> = y a_x - x a_y
    X = np.exp(X - 1j * phase_rate * axis_x[:, None] * ay[None, :])
    Y = np.exp(Y + 1j * phase_rate * axis_y[:, None] * ax[None, :])
    return X, Y


def _log_field(grid, atoms, logc, rate, phase_rate=None):
    """log of the Gaussian source sum on the grid's tensor box (n = 1) or its nodes."""
    if grid.n == 1:
        G = float(np.max(logc.real))
        c = np.exp(logc - G)
        X, Y = _separable_factors(grid.axes[0], grid.axes[1], atoms, rate, phase_rate)
        S = (X * c[None, :]) @ Y.T
        with np.errstate(divide="ignore"):
            return (np.log(np.abs(S)) + G).ravel()[grid.mask.ravel()]
    L = _lse_gauss(grid.nodes, atoms, logc, rate, phase_rate)
    return L.real


def _grow_until_settled(grid, compute):
    """Evaluate ``compute(grid) -> log-integrand on nodes`` and enlarge R until the edge is quiet."""
    for _ in range(_MAX_DOUBLINGS + 1):
        L = compute(grid)
        M = float(np.max(L))
        if not math.isfinite(M):
            return -math.inf
        e = np.exp(L - M)
        total = float(np.sum(e))
        r = np.linalg.norm(grid.nodes - grid.center, axis=1)
        shell = float(np.sum(e[r > grid.R - 1.0]))
        if shell <= _SHELL_TOL * total:
            return M + math.log(total) + math.log(grid.cell_volume)
        grid = QuadratureGrid(grid.h, 2 * grid.R, grid.n, grid.center)
    raise DivergenceError(f"target-norm integral does not settle up to R={grid.R / 2:.1f}", grid.center)


def s_target_norm(mu, f, bp, q, w, grid=None, inner=None, h=None, inner_step=None):
    """``||S f||_{L^q(w dv)}``.

    ``grid`` is the outer grid in z (chosen from the source spread and the
    decay rate when omitted); ``inner`` the density grid.  The outer radius
    is doubled until the outermost unit shell holds a negligible share.
    """
    if not q > 0:
        raise InvalidArgumentError("target exponent q must be positive")
    if mu.is_zero or f.is_zero:
        return 0.0
    atoms, masses = _sources(mu, f, bp.alpha, bp.t, None, inner, inner_step)
    lg = _berezin_log_weights(f, atoms, masses, bp.t, bp.alpha)
    if len(lg) == 0 or not np.any(np.isfinite(lg)):
        return 0.0
    keep = lg >= np.max(lg) - _PRUNE
    atoms, lg = atoms[keep], lg[keep]
    power = q / bp.t
    if grid is None:
        rate = power * bp.beta / 2
        if mu.density is not None:
            rate = q * bp.alpha * bp.beta / (2 * (bp.beta + bp.alpha * bp.t))
        grid = _outer_grid(atoms, lg, power, rate, mu.n, w, h)

    def compute(g):
        return power * _log_field(g, atoms, lg, bp.beta / 2) + w.log(g.nodes)

    return math.exp(_grow_until_settled(grid, compute) / q)


def t_target_norm(mu, f, alpha, q, w, grid=None, inner=None, h=None, inner_step=None):
    """``||T f||_{F^q_{alpha,w}}``."""
    if not q > 0:
        raise InvalidArgumentError("target exponent q must be positive")
    if mu.is_zero or f.is_zero:
        return 0.0
    atoms, masses = _sources(mu, f, alpha, 1.0, None, inner, inner_step)
    lc = _toeplitz_log_coefs(f, atoms, masses, alpha)
    if len(lc) == 0 or not np.any(np.isfinite(lc.real)):
        return 0.0
    keep = lc.real >= np.max(lc.real) - _PRUNE
    atoms, lc = atoms[keep], lc[keep]
    if grid is None:
        rate = q * alpha / 2 if mu.density is None else q * alpha / 4
        grid = _outer_grid(atoms, lc.real, q, rate, mu.n, w, h)

    def compute(g):
        return q * _log_field(g, atoms, lc, alpha / 2, phase_rate=alpha) + w.log(g.nodes)

    return math.exp(_grow_until_settled(grid, compute) / q)
