"""
Checking the algebra against brute force
========================================

Every analytic quantity has a second implementation built from truncated
Fock vectors and finite differences.  This script runs both at a few random
points and prints the comparison table that ``psmet verify`` also produces.
"""

import numpy as np

from psmet import coherent_overlap
from psmet.fock_oracle import OraclePoint, coherent_to_fock, oracle_report, random_points

# %%
# The coherent-state overlap in closed form and as a Fock-space dot product.

beta, gamma = 1.2 - 0.3j, 0.4 + 1.1j
dot = np.vdot(coherent_to_fock(beta), coherent_to_fock(gamma))
print(f"closed form {coherent_overlap(beta, gamma):.15f}\nFock sum    {dot:.15f}")

# %%
# The reference point (n = 4, g = 0.01 pi, r = 0.9) plus three random ones.

points = [OraclePoint(4, np.pi / 2, np.pi / 2, np.pi, 0.01 * np.pi, r=0.9)] + random_points(3, seed=1)
print(oracle_report(points).format_table())
