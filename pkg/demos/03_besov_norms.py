"""Thermic Besov norms, the functional inequalities and the Gronwall constant.

Run:  python demos/03_besov_norms.py
"""
import math

import numpy as np

from stablesde.besov import BesovParams, GronwallInput, gronwall_constant, gronwall_iterate, thermic_parts
from stablesde.experiments import random_inequality_case
from stablesde.noise import SpatialGrid, StableLaw, grid_for, heat_kernel_grid

law = StableLaw(1.5)

print("heat kernel in B^0.5_{1,inf}: the thermic part scales like s^(-1/3)")
times = [0.04, 0.02, 0.01]
g0 = grid_for(law, min(times), max(times), budget=1e-6)
grid = SpatialGrid(1, g0.half_width, 4 * g0.points)
vals = []
for s in times:
    parts = thermic_parts(heat_kernel_grid(law, s, grid, budget=1e-6), BesovParams(1, math.inf, 0.5), law, grid)
    vals.append(parts.thermic)
    print(f"  s={s:5.3f}  low-pass {parts.lowpass:.4f}  thermic {parts.thermic:.4f}")
print(f"  slope {np.polyfit(np.log(times), np.log(vals), 1)[0]:.3f}")

print("inequality margins (lhs / rhs) on random spectral fields")
torus = SpatialGrid(1, 8 * math.pi, 4096)
rng = np.random.default_rng(0)
for kind in ("duality", "young", "product", "embedding"):
    r = [random_inequality_case(kind, rng, law, torus).ratio for _ in range(20)]
    print(f"  {kind:9s} max {max(r):.3f}  median {np.median(r):.3f}")

print("singular Gronwall constant")
for lam in (0.2, 1.0, 2.0):
    inp = GronwallInput(1.0, lam, 0.3, 0.4, 1.0, N=64)
    print(f"  lambda={lam:3.1f}  C={gronwall_constant(inp):.3g}  extremal sup={gronwall_iterate(inp):.3f}")
