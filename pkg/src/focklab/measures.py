"""Positive Borel measures on C^n: finite atom lists plus an optional density.

Ball masses use open balls and cube masses use half-open cubes, so an atom
on a ball's boundary is never counted and an atom on a cube's upper face
belongs to the neighbouring cube.
"""

import math

import numpy as np
from scipy.spatial import cKDTree

from focklab.errors import InvalidArgumentError, NumericalDomainError
from focklab.numerics import (
    Ball,
    Cube,
    as_points,
    ball_integral,
    chunked,
    cube_integral,
    default_step,
    lattice_points,
)

# Atoms lists larger than this are indexed with a k-d tree.
_TREE_THRESHOLD = 64


class Measure:
    """``mu = sum_k m_k delta_{a_k} + g dv``.

    ``density`` is a callable returning non-negative values on ``(N, 2n)``
    point arrays, or ``None``.  ``support_radius`` bounds ``|z|`` on the
    support (``inf`` when unbounded).  ``family`` and ``params`` record how
    the measure was built, for reports and configuration echo.
    """

    def __init__(self, atoms=None, masses=None, density=None, n=1,
                 support_radius=None, family="custom", params=None, density_decay=None):
        self.n = int(n)
        atoms = np.zeros((0, 2 * self.n)) if atoms is None else as_points(atoms, self.n)
        masses = np.zeros(0) if masses is None else np.asarray(masses, dtype=float).ravel()
        if len(atoms) != len(masses):
            raise InvalidArgumentError("atoms and masses must have the same length")
        if np.any(~np.isfinite(masses)) or np.any(masses <= 0):
            raise InvalidArgumentError("atom masses must be finite and strictly positive")
        self.atoms = atoms
        self.masses = masses
        self.density = density
        if support_radius is None:
            support_radius = math.inf if density is not None else (
                float(np.max(np.linalg.norm(atoms, axis=1))) if len(atoms) else 0.0)
        self.support_radius = float(support_radius)
        # Gaussian decay rate of the density, if known; used to size grids.
        self.density_decay = density_decay
        self.family = family
        self.params = dict(params or {})
        self._tree = None

    def __repr__(self):
        dens = "" if self.density is None else " + density"
        return f"Measure({self.family}, {len(self.masses)} atoms{dens}, n={self.n})"

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, n=1):
        return cls(n=n, family="zero")

    @classmethod
    def dirac(cls, location, mass=1.0):
        loc = np.asarray(location, dtype=float).ravel()
        return cls(loc[None, :], [mass], n=loc.size // 2, family="dirac",
                   params={"location": loc.tolist(), "mass": float(mass)})

    @classmethod
    def from_atoms(cls, atoms, masses, n=None):
        atoms = as_points(atoms, n)
        return cls(atoms, masses, n=atoms.shape[1] // 2, family="atoms",
                   params={"atoms": atoms.tolist(), "masses": np.asarray(masses, dtype=float).tolist()})

    @classmethod
    def random_cloud(cls, count, radius, n=1, seed=0, mass_range=(0.5, 1.5)):
        """``count`` atoms uniform in ``B_radius(0)`` with uniform random masses."""
        rng = np.random.default_rng(seed)
        d = 2 * n
        dirs = rng.standard_normal((count, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        rad = radius * rng.random(count) ** (1.0 / d)
        atoms = dirs * rad[:, None]
        masses = rng.uniform(mass_range[0], mass_range[1], count)
        return cls(atoms, masses, n=n, support_radius=radius, family="cloud",
                   params={"count": int(count), "radius": float(radius), "seed": int(seed),
                           "mass_range": [float(mass_range[0]), float(mass_range[1])]})

    @classmethod
    def lattice(cls, profile="gauss", rate=1.0, radius=12.0, n=1, spacing=1.0, scale=1.0):
        """Atoms on ``spacing * Z^{2n}`` within ``radius``.

        ``profile="gauss"`` gives masses ``exp(-rate |nu|^2)``;
        ``profile="power"`` gives ``(1 + |nu|)^(-rate)``.
        """
        nus = lattice_points(spacing, radius, n)
        r = np.linalg.norm(nus, axis=1)
        if profile == "gauss":
            m = np.exp(-rate * r**2)
        elif profile == "power":
            m = (1.0 + r) ** (-rate)
        else:
            raise InvalidArgumentError(f"unknown lattice profile {profile!r}")
        m = scale * m
        keep = m > 0
        return cls(nus[keep], m[keep], n=n, support_radius=radius, family=f"lattice-{profile}",
                   params={"rate": float(rate), "radius": float(radius),
                           "spacing": float(spacing), "scale": float(scale)})

    @classmethod
    def lebesgue(cls, n=1, c=1.0):
        return cls(density=lambda p: np.full(len(p), c), n=n, family="lebesgue",
                   params={"c": float(c)}, density_decay=0.0)

    @classmethod
    def gaussian_density(cls, sigma=1.0, n=1, c=1.0):
        """Density ``c * exp(-sigma |z|^2)``; ``sigma`` is a decay rate, not a width."""
        return cls(density=lambda p: c * np.exp(-sigma * np.sum(p**2, axis=1)), n=n,
                   family="gauss-density", params={"sigma": float(sigma), "c": float(c)},
                   density_decay=float(sigma))

    @classmethod
    def disk_density(cls, radius=2.0, n=1, c=1.0):
        return cls(density=lambda p: c * (np.sum(p**2, axis=1) < radius**2).astype(float), n=n,
                   support_radius=radius, family="disk-density",
                   params={"radius": float(radius), "c": float(c)})

    # -- algebra ------------------------------------------------------------

    def scaled(self, lam):
        """``lam * mu``: all atom masses and the density scaled by ``lam > 0``."""
        if not lam > 0:
            raise InvalidArgumentError("measures can only be scaled by positive constants")
        dens = None
        if self.density is not None:
            base = self.density
            dens = lambda p: lam * base(p)  # noqa: E731
        params = dict(self.params, measure_scale=lam * self.params.get("measure_scale", 1.0))
        return Measure(self.atoms, lam * self.masses, dens, self.n, self.support_radius,
                       self.family, params, self.density_decay)

    def with_atom(self, location, mass):
        loc = np.asarray(location, dtype=float).reshape(1, -1)
        r = max(self.support_radius, float(np.linalg.norm(loc)))
        return Measure(np.vstack([self.atoms, loc]), np.append(self.masses, mass),
                       self.density, self.n, r, self.family + "+atom", self.params, self.density_decay)

    @property
    def is_zero(self):
        return len(self.masses) == 0 and self.density is None

    @property
    def has_density(self):
        return self.density is not None

    # -- masses -------------------------------------------------------------

    def _density_values(self, pts):
        vals = np.asarray(self.density(pts), dtype=float)
        bad = ~np.isfinite(vals)
        if bad.any():
            i = int(np.argmax(bad))
            raise NumericalDomainError(f"density is not finite at {pts[i].tolist()}", pts[i])
        return vals

    def _tree_(self):
        if self._tree is None:
            self._tree = cKDTree(self.atoms)
        return self._tree

    def atom_ball_masses(self, centers, radius):
        centers = as_points(centers, self.n)
        out = np.zeros(len(centers))
        if len(self.masses) == 0:
            return out
        if len(self.masses) <= _TREE_THRESHOLD or len(centers) <= 4:
            for sl in chunked(len(centers), max(1, 4_000_000 // max(1, len(self.masses)))):
                d2 = np.sum((centers[sl, None, :] - self.atoms[None, :, :]) ** 2, axis=2)
                out[sl] = (d2 < radius**2) @ self.masses
            return out
        other = cKDTree(centers)
        pairs = other.sparse_distance_matrix(self._tree_(), radius, output_type="ndarray")
        if len(pairs):
            i, j = pairs["i"], pairs["j"]
            # recompute distances exactly: the tree reports d <= radius
            d2 = np.sum((centers[i] - self.atoms[j]) ** 2, axis=1)
            inside = d2 < radius**2
            out += np.bincount(i[inside], weights=self.masses[j[inside]], minlength=len(centers))
        return out

    def atom_cube_masses(self, centers, side):
        centers = as_points(centers, self.n)
        out = np.zeros(len(centers))
        if len(self.masses) == 0:
            return out
        half = side / 2
        for sl in chunked(len(centers), max(1, 2_000_000 // max(1, len(self.masses)))):
            rel = self.atoms[None, :, :] - centers[sl, None, :]
            inside = np.all((rel >= -half) & (rel < half), axis=2)
            out[sl] = inside @ self.masses
        return out

    def ball_masses(self, centers, radius, step=None):
        centers = as_points(centers, self.n)
        out = self.atom_ball_masses(centers, radius)
        if self.density is not None:
            step = default_step(self.n) if step is None else step
            out = out + ball_integral(self._density_values, centers, radius, step, self.n)
        return out

    def cube_masses(self, centers, side, step=None):
        centers = as_points(centers, self.n)
        out = self.atom_cube_masses(centers, side)
        if self.density is not None:
            step = default_step(self.n) if step is None else step
            out = out + cube_integral(self._density_values, centers, side, step, self.n)
        return out

    def occupied_cubes(self, side=1.0, R=None):
        """Lattice points nu of ``side * Z^{2n}`` whose cube may carry mass.

        For atoms this is exact; for a density every lattice point within the
        support (capped at ``R``) is returned.
        """
        parts = []
        if len(self.masses):
            idx = np.floor(self.atoms / side + 0.5)
            parts.append(np.unique(idx, axis=0) * side)
        if self.density is not None:
            rad = self.support_radius + side * math.sqrt(2 * self.n)
            if R is not None:
                rad = min(rad, R)
            if not math.isfinite(rad):
                raise InvalidArgumentError("unbounded density needs an explicit lattice radius")
            parts.append(lattice_points(side, rad, self.n))
        if not parts:
            return np.zeros((0, 2 * self.n))
        nus = np.unique(np.vstack(parts), axis=0)
        if R is not None:
            nus = nus[np.linalg.norm(nus, axis=1) <= R + 1e-12]
        return nus

    def discretize(self, center, radius, step):
        """Atoms plus the density sampled as midpoint atoms on ``center + step Z^{2n}``.

        Density nodes farther than ``radius`` from ``center`` are dropped;
        atoms are always kept.
        """
        if self.density is None:
            return self.atoms, self.masses
        from focklab.numerics import QuadratureGrid

        rad = min(radius, self.support_radius + step * math.sqrt(2 * self.n)) if math.isfinite(self.support_radius) else radius
        g = QuadratureGrid(step, max(rad, step), self.n, center)
        nodes = g.nodes
        m = self._density_values(nodes) * g.cell_volume
        keep = m > 0
        return np.vstack([self.atoms, nodes[keep]]), np.concatenate([self.masses, m[keep]])

    def total_mass(self):
        if self.density is not None:
            raise InvalidArgumentError("total mass of a density measure is not tracked")
        return float(np.sum(self.masses))


def ball_mass(mu, B, step=None):
    """``mu(B)`` for an open ball."""
    if not isinstance(B, Ball):
        raise InvalidArgumentError("ball_mass expects a Ball")
    return float(mu.ball_masses(B.center[None, :], B.radius, step)[0])


def cube_mass(mu, Q, step=None):
    """``mu(Q)`` for a half-open cube."""
    if not isinstance(Q, Cube):
        raise InvalidArgumentError("cube_mass expects a Cube")
    return float(mu.cube_masses(Q.center[None, :], Q.side, step)[0])


# Analytic compactness answer (does mu(B_1(z)) -> 0?) for the shipped families.
EXPECTED_VANISHING = {
    "zero": True,
    "dirac": True,
    "atoms": True,
    "cloud": True,
    "lattice-gauss": True,
    "lattice-power": True,
    "gauss-density": True,
    "disk-density": True,
    "lebesgue": False,
}


def measure_from_spec(spec, n=1):
    """Build a measure from a config mapping such as ``{"kind": "lattice", "profile": "gauss"}``."""
    kind = spec.get("kind")
    if kind == "zero":
        return Measure.zero(n)
    if kind == "dirac":
        return Measure.dirac(spec.get("location", [0.0] * (2 * n)), float(spec.get("mass", 1.0)))
    if kind == "atoms":
        return Measure.from_atoms(spec["atoms"], spec["masses"], n)
    if kind == "cloud":
        lo, hi = spec.get("mass_range", [0.5, 1.5])
        return Measure.random_cloud(int(spec.get("count", 20)), float(spec.get("radius", 3.0)), n,
                                    int(spec.get("seed", 0)), (float(lo), float(hi)))
    if kind == "lattice":
        return Measure.lattice(spec.get("profile", "gauss"), float(spec.get("rate", 1.0)),
                               float(spec.get("radius", 12.0)), n, float(spec.get("spacing", 1.0)),
                               float(spec.get("scale", 1.0)))
    if kind == "lebesgue":
        return Measure.lebesgue(n, float(spec.get("c", 1.0)))
    if kind == "gauss-density":
        return Measure.gaussian_density(float(spec.get("sigma", 1.0)), n, float(spec.get("c", 1.0)))
    if kind == "disk-density":
        return Measure.disk_density(float(spec.get("radius", 2.0)), n, float(spec.get("c", 1.0)))
    raise InvalidArgumentError(f"unknown measure kind {kind!r}")
