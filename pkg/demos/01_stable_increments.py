"""Sample stable increments and compare their empirical characteristic function.

Run:  python demos/01_stable_increments.py
"""
import math

import numpy as np

from stablesde.noise import StableLaw, sample_increment
from stablesde.rng import Role, stream

M = 200_000
for alpha in (1.3, 1.7, 2.0):
    law = StableLaw(alpha)
    z = sample_increment(law, 0.5, stream(1), size=M, gaussian_rng=stream(1, role=Role.GAUSSIAN))[:, 0]
    print(f"alpha = {alpha}  ({law.exponent_convention})")
    for xi in (0.5, 1.0, 2.0):
        c = np.cos(xi * z)
        exact = math.exp(-0.5 * float(law.psi(xi)))
        print(f"  xi={xi:3.1f}  empirical {c.mean():.4f}  exact {exact:.4f}  "
              f"z={(c.mean() - exact) / (c.std(ddof=1) / math.sqrt(M)):+.2f}")
    # heavy tails: the fraction beyond 10 decays like 10^-alpha for alpha < 2
    print(f"  P(|Z| > 10) = {np.mean(np.abs(z) > 10):.2e}")
