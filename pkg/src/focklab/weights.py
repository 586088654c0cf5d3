"""Weights on C^n, their set masses w(E), and restricted Muckenhoupt diagnostics.

Four weight kinds can be described in configuration files: ``constant``,
``exp-linear`` (``w(z) = exp(a . z)``), ``radial-power-gauss``
(``w(z) = (1 + |z|^2)^s exp(-eps |z|^2)``) and ``tabulated``.  Arbitrary
positive callables are accepted through :meth:`Weight.from_callable`.

Every weight evaluates in log form so that very large or very small values
(``exp(|z|^2)`` at ``|z| = 20``, say) stay representable.

Example
-------
>>> w = Weight.exp_linear([1.0, 0.0])
>>> round(ap_restricted_constant(w, 2.0, 1.0, [[0.0, 0.0], [3.0, 1.0]]).value, 3)
1.086
"""

from dataclasses import dataclass, field
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy import special
from scipy.interpolate import RegularGridInterpolator

from focklab.errors import InvalidArgumentError, InvalidWeightError, NumericalDomainError
from focklab.numerics import (
    Ball,
    Cube,
    as_points,
    ball_integral,
    cube_stencil,
    default_step,
    lattice_points,
    pairwise_max,
)

AP_SENTINEL = 1e6
A_INFINITY_EXPONENTS = (1.0, 2.0, 4.0, 8.0)


class Weight:
    """A strictly positive weight with a vectorised log-evaluator."""

    def __init__(self, log_fn, n, kind, params=None, log_cube=None, log_ball=None):
        self._log_fn = log_fn
        self.n = int(n)
        self.kind = kind
        self.params = dict(params or {})
        self._log_cube = log_cube
        self._log_ball = log_ball
        self._cache = {}

    def __repr__(self):
        return f"Weight({self.kind}, n={self.n}, {self.params})"

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, c=1.0, n=1):
        if not c > 0:
            raise InvalidWeightError(f"constant weight must be positive, got {c}")
        logc = math.log(c)

        def log_fn(pts):
            return np.full(len(pts), logc)

        def log_cube(centers, side):
            return np.full(len(centers), logc + 2 * n * math.log(side))

        def log_ball(centers, radius):
            vol = math.pi**n / math.factorial(n) * radius ** (2 * n)
            return np.full(len(centers), logc + math.log(vol))

        return cls(log_fn, n, "constant", {"c": float(c)}, log_cube, log_ball)

    @classmethod
    def exp_linear(cls, a):
        a = np.asarray(a, dtype=float).ravel()
        if a.size % 2:
            raise InvalidArgumentError("exp-linear coefficient needs 2n entries")
        n = a.size // 2
        d = 2 * n
        anorm = float(np.linalg.norm(a))

        def log_fn(pts):
            return pts @ a

        def log_cube(centers, side):
            half = side / 2
            with np.errstate(divide="ignore", invalid="ignore"):
                per_axis = np.where(
                    a != 0,
                    np.log(2 * np.sinh(np.abs(a) * half) / np.where(a != 0, np.abs(a), 1.0)),
                    math.log(side),
                )
            return centers @ a + per_axis.sum()

        def log_ball(centers, radius):
            if anorm == 0:
                vol = math.pi**n / math.factorial(n) * radius**d
                return np.full(len(centers), math.log(vol))
            x = anorm * radius
            # int_{|y|<r} e^{a.y} dy = (2 pi r/|a|)^{d/2} I_{d/2}(|a| r)
            lb = (d / 2) * math.log(2 * math.pi * radius / anorm) + math.log(special.ive(d / 2, x)) + x
            return centers @ a + lb

        return cls(log_fn, n, "exp-linear", {"a": a.tolist()}, log_cube, log_ball)

    @classmethod
    def radial_power_gauss(cls, s=0.0, eps=0.0, n=1):
        # eps < 0 is allowed so that exp(|z|^2)-type counterexamples are expressible.
        s, eps = float(s), float(eps)

        def log_fn(pts):
            r2 = np.sum(pts**2, axis=1)
            return s * np.log1p(r2) - eps * r2

        return cls(log_fn, n, "radial-power-gauss", {"s": s, "eps": eps})

    @classmethod
    def tabulated(cls, axes, values):
        """Multilinear interpolation of positive samples on a tensor grid.

        Outside the table the value at the nearest table point is used.
        """
        axes = [np.asarray(ax, dtype=float) for ax in axes]
        values = np.asarray(values, dtype=float)
        if len(axes) % 2 or values.shape != tuple(len(ax) for ax in axes):
            raise InvalidArgumentError("tabulated weight needs 2n axes matching the value array")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise InvalidWeightError("tabulated weight values must be finite and strictly positive")
        interp = RegularGridInterpolator(axes, np.log(values), method="linear")
        lo = np.array([ax[0] for ax in axes])
        hi = np.array([ax[-1] for ax in axes])

        def log_fn(pts):
            return interp(np.clip(pts, lo, hi))

        params = {"axes": [ax.tolist() for ax in axes], "values": values.tolist()}
        return cls(log_fn, len(axes) // 2, "tabulated", params)

    @classmethod
    def from_callable(cls, fn, n=1, label="callable", log=False):
        """Wrap ``fn(points) -> values`` (or log-values when ``log=True``)."""
        if log:
            log_fn = fn
        else:
            def log_fn(pts):
                with np.errstate(divide="ignore", invalid="ignore"):
                    return np.log(np.asarray(fn(pts), dtype=float))
        return cls(log_fn, n, label)

    # -- evaluation ---------------------------------------------------------

    def log(self, pts):
        pts = as_points(pts, self.n)
        vals = np.asarray(self._log_fn(pts), dtype=float)
        if vals.shape != (len(pts),):
            vals = np.broadcast_to(vals, (len(pts),)).copy()
        bad = np.isnan(vals) | (vals == -np.inf) | (vals == np.inf)
        if bad.any():
            i = int(np.argmax(bad))
            raise InvalidWeightError(f"weight is not strictly positive and finite at {pts[i].tolist()}")
        return vals

    def __call__(self, pts):
        return np.exp(self.log(pts))

    def scaled(self, c):
        """The weight ``c * w``."""
        if not c > 0:
            raise InvalidArgumentError("weights can only be scaled by positive constants")
        logc = math.log(c)
        base = self

        def log_fn(pts):
            return base._log_fn(pts) + logc

        log_cube = None if base._log_cube is None else (lambda c_, s: base._log_cube(c_, s) + logc)
        log_ball = None if base._log_ball is None else (lambda c_, r: base._log_ball(c_, r) + logc)
        params = dict(base.params, scale=c * base.params.get("scale", 1.0))
        return Weight(log_fn, base.n, base.kind, params, log_cube, log_ball)

    def drift(self, rate):
        """How far a Gaussian bump of the given rate is pulled by this weight."""
        if self.kind == "exp-linear":
            return float(np.linalg.norm(self.params["a"])) / (2 * rate)
        if self.kind == "radial-power-gauss":
            s, eps = self.params["s"], self.params["eps"]
            if eps < 0:
                return math.inf if rate + eps <= 0 else math.sqrt(max(s, 0.0) / (rate + eps)) + 1.0
            return math.sqrt(max(s, 0.0) / rate)
        return 0.0

    @property
    def has_closed_forms(self):
        return self._log_cube is not None

    # -- masses -------------------------------------------------------------

    def log_cube_masses(self, centers, side, step=None, method="auto"):
        centers = as_points(centers, self.n)
        if method == "auto" and self._log_cube is not None:
            return np.asarray(self._log_cube(centers, side), dtype=float)
        step = default_step(self.n) if step is None else step
        key = ("cube", float(side), float(step), centers.tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        mids, _, vol = cube_stencil(side, step, self.n)
        out = _log_stencil_sum(self.log, centers, mids) + math.log(vol)
        self._cache[key] = out
        return out

    def log_ball_masses(self, centers, radius, step=None, method="auto"):
        centers = as_points(centers, self.n)
        if method == "auto" and self._log_ball is not None:
            return np.asarray(self._log_ball(centers, radius), dtype=float)
        step = default_step(self.n) if step is None else step
        key = ("ball", float(radius), float(step), centers.tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = ball_integral(self.log, centers, radius, step, self.n, log=True)
        self._cache[key] = out
        return out

    def cube_masses(self, centers, side, step=None, method="auto"):
        return np.exp(self.log_cube_masses(centers, side, step, method))

    def ball_masses(self, centers, radius, step=None, method="auto"):
        return np.exp(self.log_ball_masses(centers, radius, step, method))


def _log_stencil_sum(log_fn, centers, offs):
    out = np.empty(len(centers))
    per = max(1, 1_000_000 // len(offs))
    for start in range(0, len(centers), per):
        c = centers[start:start + per]
        pts = (c[:, None, :] + offs[None, :, :]).reshape(-1, c.shape[1])
        lv = log_fn(pts).reshape(len(c), len(offs))
        m = lv.max(axis=1, keepdims=True)
        out[start:start + per] = m[:, 0] + np.log(np.sum(np.exp(lv - m), axis=1))
    return out


def mass_on_cube(w, Q, step=None, method="quadrature"):
    """``w(Q)`` by midpoint quadrature on an exact subdivision of ``Q``.

    ``method="auto"`` uses a closed form when the weight kind has one.
    """
    if not isinstance(Q, Cube):
        raise InvalidArgumentError("mass_on_cube expects a Cube")
    val = float(w.cube_masses(Q.center[None, :], Q.side, step, method)[0])
    if not math.isfinite(val):
        raise NumericalDomainError("cube mass is not finite", Q.center)
    return val


def mass_on_ball(w, B, step=None, method="quadrature"):
    """``w(B)`` by coverage-weighted quadrature over the ball."""
    if not isinstance(B, Ball):
        raise InvalidArgumentError("mass_on_ball expects a Ball")
    val = float(w.ball_masses(B.center[None, :], B.radius, step, method)[0])
    if not math.isfinite(val):
        raise NumericalDomainError("ball mass is not finite", B.center)
    return val


class ClassConstant(NamedTuple):
    value: float
    center: np.ndarray
    per_center: np.ndarray


def _cube_log_samples(w, centers, r, step):
    mids, verts, _ = cube_stencil(r, default_step(w.n) if step is None else step, w.n)
    for c in centers:
        yield w.log(c + mids), w.log(c + verts)


def _log_mean_exp(x):
    m = np.max(x)
    return m + math.log(np.mean(np.exp(x - m)))


def _pick(per_center, centers):
    per_center = np.asarray(per_center)
    i = int(np.argmax(per_center))
    return ClassConstant(float(per_center[i]), np.asarray(centers)[i].copy(), per_center)


def ap_restricted_constant(w, p, r, centers, step=None):
    """Largest A_p^res quantity over the given cube centers.

    For each center ``z`` computes ``avg_Q w * (avg_Q w^{-1/(p-1)})^{p-1}`` on
    ``Q = Q_r(z)``.  Overflow is reported as ``inf`` (diverged).
    """
    if not p > 1:
        raise InvalidArgumentError(f"A_p needs p > 1, got {p}")
    centers = as_points(centers, w.n)
    if len(centers) == 0:
        raise InvalidArgumentError("need at least one center")
    e = 1.0 / (p - 1.0)
    vals = []
    for lw, _ in _cube_log_samples(w, centers, r, step):
        log_const = _log_mean_exp(lw) + (p - 1.0) * _log_mean_exp(-e * lw)
        vals.append(math.exp(log_const) if log_const < 700 else math.inf)
    return _pick(vals, centers)


def a1_restricted_constant(w, r, centers, step=None):
    """Largest ``w(Q)/(v(Q) * ess inf_Q w)`` over cubes ``Q_r(z)``.

    The essential infimum is approximated by the minimum over the closed
    vertex lattice of the quadrature subdivision.
    """
    centers = as_points(centers, w.n)
    if len(centers) == 0:
        raise InvalidArgumentError("need at least one center")
    vals = []
    for lw, lv in _cube_log_samples(w, centers, r, step):
        log_const = _log_mean_exp(lw) - min(lv.min(), lw.min())
        vals.append(math.exp(log_const) if log_const < 700 else math.inf)
    return _pick(vals, centers)


def doubling_and_growth(w, r, R_sup, step=None):
    """Empirical doubling constant C1 and lattice growth constant C2.

    C1 = max w(Q_{3r}(nu)) / w(Q_r(nu)) and
    C2 = max (w(Q_r(nu)) / w(Q_r(nu')))^{1/|nu - nu'|} over lattice points
    ``nu, nu'`` of ``r Z^{2n}`` within ``R_sup``.
    """
    if not r > 0 or not R_sup > 0:
        raise InvalidArgumentError("r and R_sup must be positive")
    nus = lattice_points(r, R_sup, w.n)
    small = w.log_cube_masses(nus, r, step, method="quadrature")
    big = w.log_cube_masses(nus, 3 * r, step, method="quadrature")
    c1 = float(np.exp(np.max(big - small)))
    c2 = float(np.exp(pairwise_max(small, nus))) if len(nus) > 1 else 1.0
    return c1, c2


@dataclass
class WeightClassReport:
    p: float
    r: float
    ap_constant: float
    a1_constant: Optional[float]
    doubling_constant: float
    lattice_growth_constant: float
    in_a_infinity: bool
    ap_by_exponent: dict = field(default_factory=dict)
    shell_profiles: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)


def shell_profile(per_center, centers, shell_edges):
    """Maximum of per-center values inside each annulus ``[e_k, e_{k+1})``."""
    radii = np.linalg.norm(centers, axis=1)
    out = []
    for lo, hi in zip(shell_edges[:-1], shell_edges[1:]):
        sel = (radii >= lo) & (radii < hi)
        out.append(float(np.max(per_center[sel])) if sel.any() else math.nan)
    return out


def _is_growing(profile, tol=1e-2):
    tail = [v for v in profile if not math.isnan(v)][-3:]
    if len(tail) < 3:
        return False
    return all(b > a * (1 + tol) for a, b in zip(tail[:-1], tail[1:]))


def a_infinity_verdict(w, r=1.0, R_sup=8.0, step=None, exponents=A_INFINITY_EXPONENTS):
    """Decide A_infinity^res membership from shell-wise A_p profiles.

    The weight is accepted if for some exponent the constants stay below
    :data:`AP_SENTINEL` and do not grow strictly across the outer shells.
    Returns ``(verdict, constants_by_p, profiles_by_p)``.
    """
    centers = lattice_points(r, R_sup, w.n)
    edges = [e for e in np.arange(0.0, R_sup, 2.0)] + [R_sup * (1 + 1e-9) + 1e-9]
    consts, profiles = {}, {}
    verdict = False
    for p in exponents:
        res = a1_restricted_constant(w, r, centers, step) if p == 1 else ap_restricted_constant(w, p, r, centers, step)
        prof = shell_profile(res.per_center, centers, edges)
        consts[p], profiles[p] = res.value, prof
        if res.value < AP_SENTINEL and not _is_growing(prof):
            verdict = True
    return verdict, consts, profiles


def weight_class_report(w, p=2.0, r=1.0, R_sup=8.0, step=None):
    centers = lattice_points(r, R_sup, w.n)
    if p == 1:
        a1 = a1_restricted_constant(w, r, centers, step).value
        ap = a1
    else:
        ap = ap_restricted_constant(w, p, r, centers, step).value
        a1 = None
    c1, c2 = doubling_and_growth(w, r, R_sup, step)
    verdict, consts, profiles = a_infinity_verdict(w, r, R_sup, step)
    return WeightClassReport(
        p=p, r=r, ap_constant=ap, a1_constant=a1, doubling_constant=c1,
        lattice_growth_constant=c2, in_a_infinity=verdict,
        ap_by_exponent=consts, shell_profiles=profiles,
        grid={"step": default_step(w.n) if step is None else step, "R_sup": R_sup, "centers": len(centers)},
    )


def weight_from_spec(spec, n=1):
    """Build a weight from a config mapping such as ``{"kind": "exp-linear", "a": [1, 0]}``."""
    kind = spec.get("kind")
    if kind == "constant":
        return Weight.constant(float(spec.get("c", 1.0)), n)
    if kind == "exp-linear":
        return Weight.exp_linear(spec["a"])
    if kind == "radial-power-gauss":
        return Weight.radial_power_gauss(float(spec.get("s", 0.0)), float(spec.get("eps", 0.0)), n)
    if kind == "tabulated":
        return Weight.tabulated(spec["axes"], spec["values"])
    raise InvalidArgumentError(f"unknown weight kind {kind!r}")
