"""Euler-coordinate pose beliefs and the classical compounding operations.

This is the coordinate-based baseline: a pose is a 6-vector
``(x, y, z, phi, theta, psi)`` of translation and Euler angles, beliefs are
Gaussians over stacked parameter vectors, and uncertainty is propagated to
first order through numerical Jacobians of the head-to-tail, inverse and
tail-to-tail maps.

Euler convention is fixed to Z-Y-X: ``R = Rz(psi) @ Ry(theta) @ Rx(phi)``.
Only internal consistency matters here (all comparisons against the
twist-space operations go through homogeneous matrices), but the convention
is load-bearing for anyone interpreting the raw parameter vectors.
"""

from __future__ import annotations

import numpy as np

from .liegroup import Pose

# Central-difference step for all parameter-space Jacobians.
_JAC_STEP = 1e-6
# |theta| closer than this to pi/2 is treated as gimbal lock.
_GIMBAL_TOL = 1e-6

_ANGLE_IDX = np.array([3, 4, 5])


class GimbalLockError(ArithmeticError):
    """Euler extraction/propagation attempted at |theta| ~ pi/2."""


def wrap_angle(a):
    """Wrap angles into (-pi, pi]; works on scalars and arrays."""
    out = np.arctan2(np.sin(a), np.cos(a))
    out = np.where(out == -np.pi, np.pi, out)  # fold the open end
    return float(out) if out.ndim == 0 else out


def normalize_params(x) -> np.ndarray:
    """Validated copy of a 6-parameter vector with wrapped angles."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != 6:
        raise ValueError(f"parameter vector must have 6 entries, got {x.shape[0]}")
    if not np.isfinite(x).all():
        raise ValueError("parameter entries must be finite")
    out = x.copy()
    out[3:] = wrap_angle(x[3:])
    return out


def ssc_to_pose(x) -> Pose:
    """Pose of a parameter vector: R = Rz(psi) Ry(theta) Rx(phi), t = (x, y, z)."""
    x = normalize_params(x)
    cph, sph = np.cos(x[3]), np.sin(x[3])
    cth, sth = np.cos(x[4]), np.sin(x[4])
    cps, sps = np.cos(x[5]), np.sin(x[5])
    R = np.array(
        [
            [cps * cth, cps * sth * sph - sps * cph, cps * sth * cph + sps * sph],
            [sps * cth, sps * sth * sph + cps * cph, sps * sth * cph - cps * sph],
            [-sth, cth * sph, cth * cph],
        ]
    )
    return Pose(R, x[:3])


def pose_to_ssc(T: Pose) -> np.ndarray:
    """Parameter vector of a pose; raises :class:`GimbalLockError` near |theta| = pi/2."""
    if T.dim != 3:
        raise ValueError("parameter extraction needs an SE(3) pose")
    R = T.R
    sth = -float(R[2, 0])
    theta = float(np.arcsin(np.clip(sth, -1.0, 1.0)))
    if np.pi / 2 - abs(theta) < _GIMBAL_TOL:
        raise GimbalLockError(f"pitch {theta!r} is numerically at gimbal lock")
    psi = float(np.arctan2(R[1, 0], R[0, 0]))
    phi = float(np.arctan2(R[2, 1], R[2, 2]))
    return np.array([T.t[0], T.t[1], T.t[2], phi, theta, psi])


def poses_many(params: np.ndarray) -> np.ndarray:
    """Vectorized :func:`ssc_to_pose` returning homogeneous matrices (M, 4, 4)."""
    x = np.asarray(params, dtype=float)
    if x.ndim != 2 or x.shape[1] != 6:
        raise ValueError(f"expected (M, 6) parameters, got {x.shape}")
    cph, sph = np.cos(x[:, 3]), np.sin(x[:, 3])
    cth, sth = np.cos(x[:, 4]), np.sin(x[:, 4])
    cps, sps = np.cos(x[:, 5]), np.sin(x[:, 5])
    out = np.zeros((x.shape[0], 4, 4))
    out[:, 0, 0] = cps * cth
    out[:, 0, 1] = cps * sth * sph - sps * cph
    out[:, 0, 2] = cps * sth * cph + sps * sph
    out[:, 1, 0] = sps * cth
    out[:, 1, 1] = sps * sth * sph + cps * cph
    out[:, 1, 2] = sps * sth * cph - cps * sph
    out[:, 2, 0] = -sth
    out[:, 2, 1] = cth * sph
    out[:, 2, 2] = cth * cph
    out[:, :3, 3] = x[:, :3]
    out[:, 3, 3] = 1.0
    return out


def params_many(mats: np.ndarray) -> np.ndarray:
    """Vectorized :func:`pose_to_ssc` on a stack of homogeneous matrices."""
    mats = np.asarray(mats, dtype=float)
    R = mats[:, :3, :3]
    sth = np.clip(-R[:, 2, 0], -1.0, 1.0)
    theta = np.arcsin(sth)
    if (np.pi / 2 - np.abs(theta) < _GIMBAL_TOL).any():
        raise GimbalLockError("a sample pitch is numerically at gimbal lock")
    out = np.empty((mats.shape[0], 6))
    out[:, :3] = mats[:, :3, 3]
    out[:, 3] = np.arctan2(R[:, 2, 1], R[:, 2, 2])
    out[:, 4] = theta
    out[:, 5] = np.arctan2(R[:, 1, 0], R[:, 0, 0])
    return out


def compound_params(x1, x2) -> np.ndarray:
    """Mean head-to-tail map: parameters of T(x1) @ T(x2)."""
    return pose_to_ssc(ssc_to_pose(x1) @ ssc_to_pose(x2))


def inverse_params(x) -> np.ndarray:
    """Mean inverse map: parameters of T(x)^-1."""
    return pose_to_ssc(ssc_to_pose(x).inverse())


def relative_params(x1, x2) -> np.ndarray:
    """Mean tail-to-tail map: parameters of T(x1)^-1 @ T(x2)."""
    return pose_to_ssc(ssc_to_pose(x1).inverse() @ ssc_to_pose(x2))


class SscBelief:
    """Gaussian over one or more stacked 6-parameter pose vectors."""

    __slots__ = ("mean", "cov")

    def __init__(self, mean, cov):
        mean = np.asarray(mean, dtype=float).reshape(-1)
        if mean.shape[0] == 0 or mean.shape[0] % 6:
            raise ValueError("mean must stack whole 6-parameter vectors")
        mean = np.concatenate(
            [normalize_params(mean[6 * k : 6 * k + 6]) for k in range(mean.shape[0] // 6)]
        )
        cov = np.asarray(cov, dtype=float)
        n = mean.shape[0]
        if cov.shape != (n, n):
            raise ValueError(f"covariance must be {n}x{n}, got {cov.shape}")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > 1e-10 * scale:
            raise ValueError("covariance is not symmetric within tolerance")
        cov = 0.5 * (cov + cov.T)
        if np.linalg.eigvalsh(cov).min() < -1e-10 * scale:
            raise ValueError("covariance is not positive semi-definite within tolerance")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def __setattr__(self, name, value):  # pragma: no cover - guard rail
        raise AttributeError("SscBelief is immutable")

    @property
    def n(self) -> int:
        return self.mean.shape[0] // 6

    def pose_mean(self, i: int) -> np.ndarray:
        return self.mean[6 * i : 6 * i + 6]

    @classmethod
    def pair(cls, b1: "SscBelief", b2: "SscBelief", cross=None) -> "SscBelief":
        """Stack two single-pose beliefs (optionally with a 6x6 cross block)."""
        if b1.n != 1 or b2.n != 1:
            raise ValueError("pair() expects single-pose beliefs")
        cov = np.zeros((12, 12))
        cov[:6, :6] = b1.cov
        cov[6:, 6:] = b2.cov
        if cross is not None:
            cov[:6, 6:] = cross
            cov[6:, :6] = np.asarray(cross, dtype=float).T
        return cls(np.concatenate([b1.mean, b2.mean]), cov)


def _angle_aware_diff(fp: np.ndarray, fm: np.ndarray) -> np.ndarray:
    d = fp - fm
    d[_ANGLE_IDX] = wrap_angle(d[_ANGLE_IDX])
    return d


def _jacobian(f, x, h=_JAC_STEP) -> np.ndarray:
    """Central-difference Jacobian with angle-wrapped output differences."""
    x = np.asarray(x, dtype=float)
    J = np.zeros((6, x.shape[0]))
    for k in range(x.shape[0]):
        dx = np.zeros_like(x)
        dx[k] = h
        J[:, k] = _angle_aware_diff(np.asarray(f(x + dx)), np.asarray(f(x - dx))) / (2 * h)
    return J


def _require_pair(b: SscBelief, op: str) -> None:
    if b.n != 2:
        raise ValueError(f"{op} expects a stacked pair belief, got n={b.n}")


def head_to_tail(b: SscBelief) -> SscBelief:
    """Compose a correlated parameter-vector pair (x_ij, x_jk) -> x_ik.

    Mean goes through the homogeneous matrices; covariance is the first-order
    congruence by the 6x12 numerical Jacobian of the compounding map,
    including the cross-covariance blocks of the stacked input.
    """
    _require_pair(b, "head_to_tail")
    f = lambda z: compound_params(z[:6], z[6:])
    mean = f(b.mean)
    J = _jacobian(f, b.mean)
    return SscBelief(mean, J @ b.cov @ J.T)


def ssc_inverse(b: SscBelief) -> SscBelief:
    """Invert a single-pose parameter belief (frame swap)."""
    if b.n != 1:
        raise ValueError("ssc_inverse expects a single-pose belief")
    mean = inverse_params(b.mean)
    J = _jacobian(inverse_params, b.mean)
    return SscBelief(mean, J @ b.cov @ J.T)


def tail_to_tail(b: SscBelief) -> SscBelief:
    """Relative pose of a correlated parameter-vector pair (x_ij, x_ik) -> x_jk."""
    _require_pair(b, "tail_to_tail")
    f = lambda z: relative_params(z[:6], z[6:])
    mean = f(b.mean)
    J = _jacobian(f, b.mean)
    return SscBelief(mean, J @ b.cov @ J.T)
