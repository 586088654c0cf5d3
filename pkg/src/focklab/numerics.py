"""Geometry of C^n as R^{2n}, lattice enumeration and truncated quadrature.

A point of C^n is stored as a float array of length 2n with real and
imaginary parts interleaved per complex coordinate, ``(x1, y1, x2, y2, ...)``.
Batches of points are arrays of shape ``(N, 2n)``.

Integrals over C^n are computed with the midpoint rule on the cubes
``Q_h(nu)``, ``nu`` in ``h Z^{2n}``, truncated to a Euclidean ball.  For the
Gaussian-damped integrands that appear throughout the package the midpoint
rule converges spectrally, so the truncation radius is what controls the
error; :func:`gaussian_tail` and :func:`tail_radius` size it.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
import itertools
import math

import numpy as np
from scipy import special

from focklab.errors import InvalidArgumentError, NumericalDomainError

__all__ = [
    "Ball",
    "Cube",
    "QuadratureGrid",
    "as_points",
    "ball_integral",
    "ball_stencil",
    "cube_integral",
    "cube_stencil",
    "default_step",
    "from_complex",
    "gaussian_tail",
    "grid_for",
    "inner",
    "integrate",
    "lattice_points",
    "point",
    "tail_radius",
    "to_complex",
]

# Relative slack used when deciding membership of a closed ball of lattice
# points, so that e.g. (0, 1) is counted in the lattice ball of radius 1.
_LATTICE_EPS = 1e-12


def point(*zs):
    """Build a point from complex coordinates: ``point(1+2j)`` -> ``[1., 2.]``."""
    zs = np.asarray(zs, dtype=complex).ravel()
    return from_complex(zs)


def from_complex(zs):
    zs = np.asarray(zs, dtype=complex)
    out = np.empty(zs.shape[:-1] + (2 * zs.shape[-1],))
    out[..., 0::2] = zs.real
    out[..., 1::2] = zs.imag
    return out


def to_complex(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def as_points(x, n=None):
    """Coerce ``x`` to a float array of shape ``(N, 2n)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] % 2:
        raise InvalidArgumentError(f"points must have shape (N, 2n), got {x.shape}")
    if n is not None and x.shape[1] != 2 * n:
        raise InvalidArgumentError(f"expected points in C^{n}, got dimension {x.shape[1]}")
    return x


def inner(z, u):
    """Hermitian product <z, u> = sum_j z_j conj(u_j) for points in real form."""
    return np.sum(to_complex(z) * np.conj(to_complex(u)), axis=-1)


@dataclass(frozen=True, eq=False)
class Cube:
    """Half-open cube ``prod [c_i - side/2, c_i + side/2)``."""

    center: np.ndarray
    side: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        if not self.side > 0:
            raise InvalidArgumentError(f"cube side must be positive, got {self.side}")
        if self.center.size % 2:
            raise InvalidArgumentError("cube center must have 2n coordinates")

    @property
    def n(self):
        return self.center.size // 2

    @property
    def volume(self):
        return self.side ** (2 * self.n)

    def contains(self, pts):
        pts = as_points(pts, self.n)
        lo = self.center - self.side / 2
        hi = self.center + self.side / 2
        return np.all((pts >= lo) & (pts < hi), axis=1)


@dataclass(frozen=True, eq=False)
class Ball:
    """Open Euclidean ball of the given radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        if not self.radius > 0:
            raise InvalidArgumentError(f"ball radius must be positive, got {self.radius}")
        if self.center.size % 2:
            raise InvalidArgumentError("ball center must have 2n coordinates")

    @property
    def n(self):
        return self.center.size // 2

    @property
    def volume(self):
        return math.pi ** self.n / math.factorial(self.n) * self.radius ** (2 * self.n)

    def contains(self, pts):
        pts = as_points(pts, self.n)
        return np.sum((pts - self.center) ** 2, axis=1) < self.radius**2


def lattice_points(spacing, radius, n):
    """All points of ``spacing * Z^{2n}`` with norm at most ``radius``.

    Points are returned as an ``(N, 2n)`` array in lexicographic order of
    their integer coordinates.
    """
    if not spacing > 0:
        raise InvalidArgumentError(f"lattice spacing must be positive, got {spacing}")
    if radius < 0:
        raise InvalidArgumentError(f"lattice radius must be non-negative, got {radius}")
    if n < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {n}")
    return _lattice_points(float(spacing), float(radius), int(n)).copy()


@lru_cache(maxsize=64)
def _lattice_points(spacing, radius, n):
    k = int(math.floor(radius / spacing * (1 + _LATTICE_EPS) + _LATTICE_EPS))
    ks = np.arange(-k, k + 1, dtype=float)
    grids = np.meshgrid(*([ks] * (2 * n)), indexing="ij")
    ints = np.stack([g.ravel() for g in grids], axis=1)
    keep = np.sum(ints**2, axis=1) * spacing**2 <= radius**2 * (1 + 2 * _LATTICE_EPS) + _LATTICE_EPS
    pts = ints[keep] * spacing
    pts.setflags(write=False)
    return pts


def default_step(n):
    return 0.05 if n == 1 else 0.15


def gaussian_tail(alpha, R, n=1):
    """Exact value (hence a rigorous bound) of the integral of exp(-alpha |z|^2) over |z| > R.

    In real dimension 2n the tail equals ``(pi/alpha)^n * Q(n, alpha R^2)`` with
    ``Q`` the regularised upper incomplete gamma function; for n = 1 this is
    ``(pi/alpha) exp(-alpha R^2)``.
    """
    if not alpha > 0:
        raise InvalidArgumentError(f"alpha must be positive, got {alpha}")
    if not R > 0:
        raise InvalidArgumentError(f"R must be positive, got {R}")
    return (math.pi / alpha) ** n * float(special.gammaincc(n, alpha * R * R))


def tail_radius(rate, n=1, rel_tol=1e-8):
    """Smallest R with gaussian_tail(rate, R, n) <= rel_tol * (pi/rate)^n."""
    if not rate > 0:
        raise InvalidArgumentError(f"decay rate must be positive, got {rate}")
    return math.sqrt(float(special.gammainccinv(n, rel_tol)) / rate)


class QuadratureGrid:
    """Midpoint nodes ``center + h Z^{2n}`` within distance ``R`` of ``center``.

    The center is snapped to the lattice ``h Z^{2n}`` so that every node is a
    lattice point.  Values on the enclosing tensor box (see :attr:`axes`) can
    be reduced with :meth:`sum`, which applies the ball mask and the cell
    volume ``h^{2n}``.
    """

    def __init__(self, h, R, n=1, center=None):
        if not h > 0:
            raise InvalidArgumentError(f"grid step must be positive, got {h}")
        if not R > 0:
            raise InvalidArgumentError(f"truncation radius must be positive, got {R}")
        self.h = float(h)
        self.R = float(R)
        self.n = int(n)
        c = np.zeros(2 * self.n) if center is None else np.asarray(center, dtype=float).ravel()
        if c.size != 2 * self.n:
            raise InvalidArgumentError("grid center has the wrong dimension")
        self.center = np.round(c / self.h) * self.h
        self.k = int(math.floor(self.R / self.h * (1 + _LATTICE_EPS) + _LATTICE_EPS))

    def __repr__(self):
        return f"QuadratureGrid(h={self.h}, R={self.R}, n={self.n}, center={self.center.tolist()})"

    @property
    def cell_volume(self):
        return self.h ** (2 * self.n)

    @cached_property
    def offsets_1d(self):
        return np.arange(-self.k, self.k + 1) * self.h

    @cached_property
    def axes(self):
        return [c + self.offsets_1d for c in self.center]

    @property
    def shape(self):
        return (2 * self.k + 1,) * (2 * self.n)

    @cached_property
    def mask(self):
        r2 = np.zeros(self.shape)
        for i in range(2 * self.n):
            sl = [None] * (2 * self.n)
            sl[i] = slice(None)
            r2 = r2 + (self.offsets_1d**2)[tuple(sl)]
        m = r2 <= self.R**2 * (1 + 2 * _LATTICE_EPS) + _LATTICE_EPS
        m.setflags(write=False)
        return m

    @cached_property
    def box_points(self):
        grids = np.meshgrid(*self.axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        pts.setflags(write=False)
        return pts

    @cached_property
    def nodes(self):
        pts = self.box_points[self.mask.ravel()]
        pts.setflags(write=False)
        return pts

    @property
    def size(self):
        return int(self.mask.sum())

    def sum(self, box_values):
        """Midpoint-rule integral of values given on the full tensor box."""
        v = np.asarray(box_values).reshape(self.shape)
        return np.sum(v[self.mask]) * self.cell_volume

    def radial_split(self, box_values, radius):
        """Integral over nodes with |node - center| <= radius, and the full integral."""
        v = np.asarray(box_values).reshape(self.shape)[self.mask]
        r = np.linalg.norm(self.nodes - self.center, axis=1)
        inner_part = np.sum(v[r <= radius]) * self.cell_volume
        return inner_part, np.sum(v) * self.cell_volume

    def index_of(self, pts):
        """Box multi-indices of lattice-aligned points (rounded)."""
        pts = as_points(pts, self.n)
        return np.rint((pts - self.center) / self.h).astype(np.int64) + self.k

    def ball_sums(self, box_values, centers, radius):
        """Integrals of a box field over ``B_radius(c)`` for lattice-aligned centers.

        Uses the coverage-weighted ball stencil on this grid's own step; parts
        of a ball that leave the box contribute zero.
        """
        v = np.asarray(box_values).reshape(self.shape)
        offs, cov = ball_stencil(radius, self.h, self.n)
        ioffs = np.rint(offs / self.h).astype(np.int64)
        idx0 = self.index_of(centers)
        out = np.empty(len(idx0))
        size = self.shape[0]
        for j, base in enumerate(idx0):
            idx = base + ioffs
            ok = np.all((idx >= 0) & (idx < size), axis=1)
            if not ok.any():
                out[j] = 0.0
                continue
            vals = v[tuple(idx[ok].T)]
            out[j] = np.dot(vals, cov[ok])
        return out * self.cell_volume


def grid_for(rate, n=1, center=None, spread=0.0, h=None, rel_tol=1e-8):
    """Grid for an integrand decaying like exp(-rate |z - c|^2) away from a set.

    ``spread`` is the radius of the set around ``center`` where the
    integrand's mass may sit (e.g. the spread of kernel centers).
    """
    R = spread + tail_radius(rate, n, rel_tol)
    return QuadratureGrid(default_step(n) if h is None else h, R, n, center)


def integrate(f, grid):
    """Midpoint-rule integral of ``f`` over the nodes of ``grid``.

    ``f`` receives an ``(N, 2n)`` array of nodes and must return ``N`` values.
    """
    nodes = grid.nodes
    vals = np.asarray(f(nodes))
    if vals.shape != (len(nodes),):
        vals = np.broadcast_to(vals, (len(nodes),))
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise NumericalDomainError(f"integrand is not finite at node {nodes[i].tolist()}", nodes[i])
    return float(np.sum(vals) * grid.cell_volume)


@lru_cache(maxsize=32)
def _ball_stencil(radius, step, n, sub):
    d = 2 * n
    k = int(math.ceil(radius / step)) + 1
    ks = np.arange(-k, k + 1) * step
    offs = np.stack([g.ravel() for g in np.meshgrid(*([ks] * d), indexing="ij")], axis=1)
    r = np.linalg.norm(offs, axis=1)
    half_diag = step * math.sqrt(d) / 2
    cov = np.where(r + half_diag < radius, 1.0, 0.0)
    edge = np.flatnonzero((r + half_diag >= radius) & (r - half_diag < radius))
    if edge.size:
        s = (np.arange(sub) + 0.5) / sub - 0.5
        subpts = np.stack([g.ravel() for g in np.meshgrid(*([s * step] * d), indexing="ij")], axis=1)
        for chunk in np.array_split(edge, max(1, edge.size // 512)):
            p = offs[chunk][:, None, :] + subpts[None, :, :]
            cov[chunk] = np.mean(np.sum(p**2, axis=2) < radius**2, axis=1)
    keep = cov > 0
    offs, cov = offs[keep], cov[keep]
    offs.setflags(write=False)
    cov.setflags(write=False)
    return offs, cov


def ball_stencil(radius, step, n=1):
    """Cell offsets and fractional coverages for the ball ``B_radius(0)``.

    ``sum(cov) * step^{2n}`` approximates the ball volume; boundary cells are
    supersampled so the error is far below first order in ``step``.
    """
    if not radius > 0 or not step > 0:
        raise InvalidArgumentError("ball stencil needs positive radius and step")
    sub = 8 if n == 1 else 4
    return _ball_stencil(float(radius), float(step), int(n), sub)


@lru_cache(maxsize=32)
def _cube_stencil(side, m, n):
    d = 2 * n
    s = side / m
    c = (np.arange(m) + 0.5) * s - side / 2
    mids = np.stack([g.ravel() for g in np.meshgrid(*([c] * d), indexing="ij")], axis=1)
    v = np.linspace(-side / 2, side / 2, m + 1)
    verts = np.stack([g.ravel() for g in np.meshgrid(*([v] * d), indexing="ij")], axis=1)
    for a in (mids, verts):
        a.setflags(write=False)
    return mids, verts, s ** d


def cube_stencil(side, step, n=1):
    """Midpoints and closed vertex lattice of an exact subdivision of ``Q_side(0)``.

    The cube is cut into ``m = ceil(side/step)`` slabs per axis, so the
    midpoint cells tile it exactly.  Returns ``(midpoints, vertices, cell_volume)``.
    """
    if not side > 0 or not step > 0:
        raise InvalidArgumentError("cube stencil needs positive side and step")
    m = max(1, int(math.ceil(side / step - 1e-9)))
    return _cube_stencil(float(side), m, int(n))


def _chunked_stencil_sum(f, centers, offs, wts, log=False):
    centers = as_points(centers)
    out = np.empty(len(centers))
    per = max(1, 2_000_000 // max(1, len(offs)))
    for start in range(0, len(centers), per):
        c = centers[start:start + per]
        pts = (c[:, None, :] + offs[None, :, :]).reshape(-1, c.shape[1])
        vals = np.asarray(f(pts), dtype=float).reshape(len(c), len(offs))
        if log:
            vmax = np.max(vals, axis=1, keepdims=True)
            vmax = np.where(np.isfinite(vmax), vmax, 0.0)
            out[start:start + per] = vmax[:, 0] + np.log(np.exp(vals - vmax) @ wts)
        else:
            out[start:start + per] = vals @ wts
    return out


def ball_integral(f, centers, radius, step, n=None, log=False):
    """Integral of ``f`` over ``B_radius(c)`` for each row ``c`` of ``centers``.

    With ``log=True`` the callable returns log-values and the log of each
    integral is returned.
    """
    centers = as_points(centers, n)
    n = centers.shape[1] // 2
    offs, cov = ball_stencil(radius, step, n)
    wts = cov * step ** (2 * n)
    if log:
        wts = np.where(wts > 0, wts, 0.0)
    return _chunked_stencil_sum(f, centers, offs, wts, log=log)


def cube_integral(f, centers, side, step, n=None, log=False):
    """Integral of ``f`` over the half-open cube ``Q_side(c)`` for each center."""
    centers = as_points(centers, n)
    n = centers.shape[1] // 2
    mids, _, vol = cube_stencil(side, step, n)
    wts = np.full(len(mids), vol)
    return _chunked_stencil_sum(f, centers, mids, wts, log=log)


def chunked(n_items, per):
    for start in range(0, n_items, per):
        yield slice(start, min(n_items, start + per))


def pairwise_max(values, pts, chunk=2048):
    """max over i != j of (values_i - values_j) / |pts_i - pts_j|."""
    best = -np.inf
    for a, b in itertools.product(chunked(len(pts), chunk), repeat=2):
        d = np.linalg.norm(pts[a][:, None, :] - pts[b][None, :, :], axis=2)
        diff = values[a][:, None] - values[b][None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(d > 0, diff / np.where(d > 0, d, 1.0), -np.inf)
        best = max(best, float(np.max(q)))
    return best
