"""Tour of the group primitives: poses, twists, exp/log, adjoint, BCH.

Run:  python3 demos/01_lie_basics.py
"""

import numpy as np

import corrpose as cp

np.set_printoptions(precision=4, suppress=True)

# A rigid-body pose is a rotation plus a translation.  Planar and spatial
# poses share one type; twists are plain arrays ordered (rho, phi).
T = cp.Pose.planar(1.0, 2.0, np.pi / 6)
print("planar pose matrix:\n", T.matrix())

xi = np.array([0.3, -0.1, 0.0, 0.0, 0.0, 0.5])  # SE(3) twist: slide + yaw
print("\ntwist:", xi)
print("exp(twist) translation:", cp.exp_map(xi).t)
print("log(exp(twist)) recovers:", cp.log_map(cp.exp_map(xi)))

# The adjoint moves a twist across a pose: T exp(xi) == exp(Ad_T xi) T.
T3 = cp.exp_map(np.array([1.0, 0.0, 0.0, 0.0, 0.0, np.pi / 3]))
Ad = cp.adjoint(T3)
lhs = (T3 @ cp.exp_map(xi)).matrix()
rhs = (cp.exp_map(Ad @ xi) @ T3).matrix()
print("\nadjoint identity residual:", np.abs(lhs - rhs).max())

# Composition in the group corresponds to the BCH series in the algebra.
a = np.array([0.10, 0.05, 0.00, 0.02, -0.01, 0.08])
b = np.array([-0.04, 0.07, 0.01, 0.00, 0.03, -0.05])
truth = cp.log_map(cp.exp_map(a) @ cp.exp_map(b))
for order in (1, 2, 3):
    err = np.linalg.norm(cp.bch_approx(a, b, order) - truth)
    print(f"BCH order {order}: truncation error {err:.2e}")

# The logarithm refuses the branch boundary instead of guessing an axis.
try:
    cp.log_map(cp.Pose(np.diag([-1.0, -1.0, 1.0]), np.zeros(3)))
except cp.SingularLogError as e:
    print("\nlog at a 180-degree rotation:", e)
