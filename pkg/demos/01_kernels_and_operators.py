"""Fock kernels and the two integral operators, checked against closed forms.

Run: python3 demos/01_kernels_and_operators.py
"""

import math

import numpy as np

from focklab.measures import Measure
from focklab.numerics import point
from focklab.operators import BerezinParams, berezin_apply, fock_projection, toeplitz_apply
from focklab.spaces import EntireFunction, FockParams, fock_quasi_norm, normalized_kernel
from focklab.weights import Weight

# %% Kernel norms
# ||K^alpha_u|| in F^p_alpha equals e^{alpha|u|^2/2} (2 pi / (p alpha))^{1/p} in one variable.
print("kernel norms against the closed form")
for p in (1.0, 2.0, 4.0):
    fp = FockParams(p, 1.0, Weight.constant())
    for u in (point(0), point(1 + 1j)):
        num = fock_quasi_norm(EntireFunction.kernel(u), fp)
        exact = math.exp(float(u @ u) / 2) * (2 * math.pi / p) ** (1 / p)
        print(f"  p={p:g} u={u.tolist()}  quadrature {num:.10f}  exact {exact:.10f}")

# %% Normalised kernels have comparable norms everywhere
fp = FockParams(2.0, 1.0, Weight.exp_linear([0.5, 0.0]))
norms = [fock_quasi_norm(normalized_kernel(point(complex(x, y)), fp), fp) for x in range(-4, 5, 2) for y in (-2, 0, 2)]
print(f"\nnormalised kernel norms with an exp-linear weight: min {min(norms):.4f}, max {max(norms):.4f}")

# %% Reproducing property of the projection
K = EntireFunction.kernel(point(1))
z = point(1j)
print(f"\nP K(z) = {fock_projection(K, 1.0, z):.8f}  K(z) = {K(z):.8f}")

# %% Berezin-type and Toeplitz-type operators on Lebesgue measure
bp = BerezinParams(1.0, 1.0, 1.0)
for zz in (point(0), point(2)):
    val = berezin_apply(Measure.lebesgue(), EntireFunction.constant(), bp, zz)
    print(f"S 1 at |z|={np.linalg.norm(zz):g}: {val:.8f} vs pi e^(-|z|^2/4) = {math.pi * math.exp(-zz @ zz / 4):.8f}")
T = toeplitz_apply(Measure.lebesgue(), K, 1.0, z)
print(f"T K(z) = {T:.8f} vs pi K(z) = {math.pi * K(z):.8f}")
