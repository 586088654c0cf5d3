"""Entire functions built from Fock kernels, and weighted Fock quasi-norms.

An :class:`EntireFunction` is a finite sum

    f(z) = sum_j c_j K^{alpha_j}_{u_j}(z) + sum_k b_k z^{m_k},

with ``K^a_u(z) = exp(a <z, u>)`` and ``<z, u> = sum z_j conj(u_j)``.  Kernel
coefficients are stored as ``(log|c_j|, arg c_j)`` so that normalised
kernels far from the origin, whose coefficients underflow, stay exact.

>>> from focklab.numerics import point
>>> f = EntireFunction.monomial([2])
>>> complex(f(point(1 + 1j)))
2j
"""

from dataclasses import dataclass
import math

import numpy as np

from focklab.errors import DivergenceError, InvalidArgumentError, InvalidWeightError, NumericalDomainError
from focklab.numerics import as_points, ball_integral, chunked, default_step, grid_for, to_complex
from focklab.weights import Weight

__all__ = [
    "EntireFunction",
    "FockParams",
    "eval",
    "fock_quasi_norm",
    "log_fock_quasi_norm",
    "kernel_log_norms",
    "norm_grid",
    "normalized_kernel",
    "pointwise_bound_ratio",
    "rademacher_combination",
]

# exp() overflows just above this.
_LOG_MAX = 709.0
# Fraction of a quasi-norm integral allowed in the outermost unit shell of
# the grid before the integral is declared divergent.
_SHELL_TOL = 1e-4


@dataclass(frozen=True)
class FockParams:
    """Exponent ``p``, Gaussian parameter ``alpha`` and weight ``w`` of F^p_{alpha,w}."""

    p: float
    alpha: float
    weight: Weight

    def __post_init__(self):
        if not self.p > 0:
            raise InvalidArgumentError(f"FockParams.p must be positive, got {self.p}")
        if not self.alpha > 0:
            raise InvalidArgumentError(f"FockParams.alpha must be positive, got {self.alpha}")

    @property
    def n(self):
        return self.weight.n


def _perp(u):
    """(a, b) -> (-b, a) per complex coordinate, so that Im<z,u> = z . perp(u)."""
    out = np.empty_like(u)
    out[..., 0::2] = -u[..., 1::2]
    out[..., 1::2] = u[..., 0::2]
    return out


class EntireFunction:
    """Finite combination of Fock kernels and monomials on C^n."""

    def __init__(self, n, log_coefs=(), phases=(), centers=None, alphas=(), mono_coefs=(), powers=None):
        self.n = int(n)
        d = 2 * self.n
        self.log_coefs = np.asarray(log_coefs, dtype=float).ravel()
        self.phases = np.asarray(phases, dtype=float).ravel()
        self.centers = np.zeros((0, d)) if centers is None else np.asarray(centers, dtype=float).reshape(-1, d)
        self.alphas = np.asarray(alphas, dtype=float).ravel()
        m = len(self.log_coefs)
        if not (len(self.phases) == len(self.centers) == len(self.alphas) == m):
            raise InvalidArgumentError("kernel term arrays must have equal length")
        if np.any(self.alphas <= 0):
            raise InvalidArgumentError("kernel alphas must be positive")
        self.mono_coefs = np.asarray(mono_coefs, dtype=complex).ravel()
        self.powers = (np.zeros((0, self.n), dtype=np.int64) if powers is None
                       else np.asarray(powers, dtype=np.int64).reshape(-1, self.n))
        if len(self.powers) != len(self.mono_coefs):
            raise InvalidArgumentError("monomial coefficient and power arrays must have equal length")
        if np.any(self.powers < 0):
            raise InvalidArgumentError("monomial powers must be non-negative")
        for a in (self.log_coefs, self.phases, self.centers, self.alphas, self.mono_coefs, self.powers):
            a.setflags(write=False)

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, n=1):
        return cls(n)

    @classmethod
    def kernel(cls, u, alpha=1.0, coef=1.0, log_coef=None):
        """``coef * K^alpha_u``; pass ``log_coef`` to give the magnitude in log form."""
        u = np.asarray(u, dtype=float).ravel()
        if log_coef is None:
            coef = complex(coef)
            if coef == 0:
                return cls(u.size // 2)
            log_coef, phase = math.log(abs(coef)), math.atan2(coef.imag, coef.real)
        else:
            phase = 0.0 if coef is None else math.atan2(complex(coef).imag, complex(coef).real)
        return cls(u.size // 2, [log_coef], [phase], u[None, :], [alpha])

    @classmethod
    def monomial(cls, power, coef=1.0):
        power = np.asarray(power, dtype=np.int64).ravel()
        return cls(power.size, mono_coefs=[coef], powers=power[None, :])

    @classmethod
    def constant(cls, c=1.0, n=1):
        return cls.monomial([0] * n, c)

    # -- algebra ------------------------------------------------------------

    def _check(self, other):
        if not isinstance(other, EntireFunction) or other.n != self.n:
            raise InvalidArgumentError("can only combine entire functions of equal dimension")

    def __add__(self, other):
        self._check(other)
        return EntireFunction(
            self.n,
            np.concatenate([self.log_coefs, other.log_coefs]),
            np.concatenate([self.phases, other.phases]),
            np.vstack([self.centers, other.centers]),
            np.concatenate([self.alphas, other.alphas]),
            np.concatenate([self.mono_coefs, other.mono_coefs]),
            np.vstack([self.powers, other.powers]),
        )

    def __mul__(self, c):
        c = complex(c)
        if c == 0:
            return EntireFunction.zero(self.n)
        return EntireFunction(self.n, self.log_coefs + math.log(abs(c)), self.phases + math.atan2(c.imag, c.real),
                              self.centers, self.alphas, self.mono_coefs * c, self.powers)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    @property
    def num_terms(self):
        return len(self.log_coefs) + len(self.mono_coefs)

    @property
    def is_zero(self):
        return len(self.log_coefs) == 0 and not np.any(self.mono_coefs != 0)

    def __repr__(self):
        return f"EntireFunction(n={self.n}, kernels={len(self.log_coefs)}, monomials={len(self.mono_coefs)})"

    # -- evaluation ---------------------------------------------------------

    def _kernel_logs(self, z):
        """Complex logs of every kernel term at the points ``z``: shape (N, terms)."""
        a_u = self.centers * self.alphas[:, None]
        re = z @ a_u.T + self.log_coefs
        im = z @ _perp(a_u).T + self.phases
        return re + 1j * im

    def _monomials(self, z):
        zc = to_complex(z)
        vals = np.ones((len(z), len(self.mono_coefs)), dtype=complex)
        for j in range(self.n):
            vals *= zc[:, j:j + 1] ** self.powers[None, :, j]
        return vals @ self.mono_coefs

    def log_eval(self, z):
        """Complex log of f at the points ``z``: real part log|f|, imaginary part arg f.

        Kernel terms are summed with a max shift; monomials are evaluated
        directly.  Zeros of f give ``-inf`` real part.
        """
        z = as_points(z, self.n)
        out = np.full(len(z), -np.inf + 0j)
        if self.num_terms == 0:
            return out
        per = max(1, 4_000_000 // max(1, len(self.log_coefs)))
        for sl in chunked(len(z), per):
            zz = z[sl]
            if len(self.log_coefs):
                t = self._kernel_logs(zz)
                m = np.max(t.real, axis=1)
                s = np.sum(np.exp(t - m[:, None]), axis=1)
            else:
                m = np.full(len(zz), -np.inf)
                s = np.zeros(len(zz), dtype=complex)
            if len(self.mono_coefs):
                mono = self._monomials(zz)
                with np.errstate(divide="ignore"):
                    lm = np.log(np.abs(mono))
                m2 = np.maximum(m, lm)
                m2 = np.where(np.isfinite(m2), m2, 0.0)
                with np.errstate(invalid="ignore"):
                    s = s * np.exp(np.where(np.isfinite(m), m - m2, -np.inf)) + mono * np.exp(-m2)
                m = m2
            with np.errstate(divide="ignore"):
                out[sl] = m + np.log(np.abs(s)) + 1j * np.angle(s)
        return out

    def log_abs(self, z):
        return self.log_eval(z).real

    def __call__(self, z):
        """Values of f; a scalar for a single point, an array for a batch."""
        single = np.ndim(z) == 1
        pts = as_points(z, self.n)
        vals = np.zeros(len(pts), dtype=complex)
        if len(self.log_coefs):
            kern = EntireFunction(self.n, self.log_coefs, self.phases, self.centers, self.alphas)
            lg = kern.log_eval(pts)
            big = lg.real > _LOG_MAX
            if big.any():
                i = int(np.argmax(big))
                raise NumericalDomainError(
                    f"|f| overflows at {pts[i].tolist()} (log|f| = {lg.real[i]:.1f})", pts[i])
            vals += np.exp(lg)
        if len(self.mono_coefs):
            vals += self._monomials(pts)
        return complex(vals[0]) if single else vals

    def peak_hint(self, alpha):
        """Where ``|f|^p exp(-p alpha |z|^2 / 2)`` concentrates.

        Returns ``(peaks, monomial_radius)``: the kernel peaks ``(alpha_j/alpha) u_j``
        and a radius around the origin covering the monomial bumps.
        """
        peaks = self.centers * (self.alphas / alpha)[:, None]
        deg = int(self.powers.sum(axis=1).max()) if len(self.powers) else 0
        return peaks, math.sqrt(deg / alpha)


def eval(f, z):
    """Value of ``f`` at ``z``."""
    return f(z)


def norm_grid(f, fp, h=None, rel_tol=1e-10, extra=0.0):
    """Default quadrature grid for ``||f||_{F^p_{alpha,w}}``."""
    peaks, mono_r = f.peak_hint(fp.alpha)
    if len(f.mono_coefs) or len(peaks) == 0:
        peaks = np.vstack([peaks, np.zeros((1, 2 * f.n))])
    lo, hi = peaks.min(axis=0), peaks.max(axis=0)
    center = (lo + hi) / 2
    spread = float(np.max(np.linalg.norm(peaks - center, axis=1))) + mono_r
    rate = fp.p * fp.alpha / 2
    drift = fp.weight.drift(rate)
    if not math.isfinite(drift):
        drift = 0.0
    return grid_for(rate, f.n, center, spread + drift + extra, h, rel_tol)


def _log_integrand(f, fp, nodes):
    lf = f.log_abs(nodes)
    return fp.p * lf - fp.p * fp.alpha / 2 * np.sum(nodes**2, axis=1) + fp.weight.log(nodes)


def log_fock_quasi_norm(f, fp, grid=None, check=True):
    """``log ||f||_{F^p_{alpha,w}}``; ``-inf`` for the zero function."""
    if f.n != fp.n:
        raise InvalidArgumentError("function and weight dimensions differ")
    if f.is_zero:
        return -math.inf
    grid = norm_grid(f, fp) if grid is None else grid
    nodes = grid.nodes
    L = _log_integrand(f, fp, nodes)
    if np.any(np.isnan(L)) or np.any(L == np.inf):
        i = int(np.argmax(np.isnan(L) | (L == np.inf)))
        raise NumericalDomainError(f"Fock integrand is not finite at {nodes[i].tolist()}", nodes[i])
    M = float(np.max(L))
    if not math.isfinite(M):
        return -math.inf
    e = np.exp(L - M)
    total = float(np.sum(e))
    if check:
        r = np.linalg.norm(nodes - grid.center, axis=1)
        shell = float(np.sum(e[r > grid.R - 1.0]))
        if shell > _SHELL_TOL * total:
            raise DivergenceError(
                f"quasi-norm integral does not settle: {shell / total:.2e} of the mass lies in the outer shell of R={grid.R:.2f}",
                nodes[int(np.argmax(np.where(r > grid.R - 1.0, e, -1)))],
            )
    return (M + math.log(total) + math.log(grid.cell_volume)) / fp.p


def fock_quasi_norm(f, fp, grid=None, check=True):
    """``(int |f|^p exp(-p alpha |z|^2/2) w dv)^(1/p)`` by midpoint quadrature.

    Raises :class:`DivergenceError` when a noticeable share of the integral
    sits at the edge of the grid, which is how non-integrable inputs show up.
    """
    return math.exp(log_fock_quasi_norm(f, fp, grid, check))


def normalized_kernel(z, fp, r=1.0, step=None):
    """``f_z(u) = exp(alpha <u, z> - alpha |z|^2 / 2) / w(B_r(z))^(1/p)``."""
    z = np.asarray(z, dtype=float).ravel()
    lwb = float(fp.weight.log_ball_masses(z[None, :], r, step)[0])
    if not math.isfinite(lwb):
        raise InvalidWeightError(f"weight has zero or infinite mass on the ball around {z.tolist()}")
    log_coef = -fp.alpha * float(z @ z) / 2 - lwb / fp.p
    return EntireFunction(z.size // 2, [log_coef], [0.0], z[None, :], [fp.alpha])


def kernel_log_norms(nus, fp, h=None):
    """``log ||K^alpha_nu||`` for each row of ``nus``, each on its own centred grid."""
    nus = as_points(nus, fp.n)
    out = np.empty(len(nus))
    for i, nu in enumerate(nus):
        out[i] = log_fock_quasi_norm(EntireFunction.kernel(nu, fp.alpha), fp,
                                     norm_grid(EntireFunction.kernel(nu, fp.alpha), fp, h))
    return out


def rademacher_combination(nus, coeffs, signs, fp, log_norms=None, h=None):
    """``F = sum_nu c_nu s_nu K^alpha_nu / ||K^alpha_nu||`` for a sign pattern ``s``."""
    nus = as_points(nus, fp.n)
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    signs = np.asarray(signs, dtype=float).ravel()
    if not (len(nus) == len(coeffs) == len(signs)):
        raise InvalidArgumentError("centers, coefficients and signs must have equal length")
    if np.any(np.abs(signs) != 1):
        raise InvalidArgumentError("signs must be +1 or -1")
    if log_norms is None:
        log_norms = kernel_log_norms(nus, fp, h)
    log_norms = np.asarray(log_norms, dtype=float)
    keep = coeffs != 0
    with np.errstate(divide="ignore"):
        lc = np.log(np.abs(coeffs[keep])) - log_norms[keep]
    phase = np.where(coeffs[keep] * signs[keep] < 0, math.pi, 0.0)
    return EntireFunction(fp.n, lc, phase, nus[keep], np.full(int(keep.sum()), fp.alpha))


def pointwise_bound_ratio(f, fp, z, r=1.0, step=None):
    """Local mean-value ratio for ``|f|^p exp(-p alpha |.|^2/2)`` at ``z``.

    Returns numerator over the ``w``-weighted average on ``B_r(z)``; ``nan``
    when both vanish and ``inf`` when only the denominator does.
    """
    if not r > 0:
        raise InvalidArgumentError("ball radius must be positive")
    z = np.asarray(z, dtype=float).ravel()
    step = default_step(fp.n) if step is None else step
    if f.is_zero:
        return math.nan
    log_num = float(_log_integrand(f, fp, z[None, :])[0] - fp.weight.log(z[None, :])[0])
    log_int = float(ball_integral(lambda pts: _log_integrand(f, fp, pts), z[None, :], r, step, fp.n, log=True)[0])
    log_wb = float(fp.weight.log_ball_masses(z[None, :], r, step)[0])
    if not math.isfinite(log_int):
        return math.nan if not math.isfinite(log_num) else math.inf
    return math.exp(log_num - log_int + log_wb)
