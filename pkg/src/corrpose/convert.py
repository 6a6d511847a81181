"""Unscented conversion from Euler-coordinate beliefs to twist-space beliefs.

The map from a parameter vector to the group element is nonlinear, so the
conversion runs sigma points of the coordinate Gaussian through

    l_i(x_i) = log( f(x_i) @ f(x_hat_i)^-1 )

which centers each pose block on the identity and lands in the Lie algebra,
then rebuilds the stacked covariance from the weighted outer products.  With
n poses the input space has dimension 6n and the point set has 12n + 1
members.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import JointPoseBelief
from .liegroup import SingularLogError, log_map
from .ssc import SscBelief, ssc_to_pose


class ConversionError(RuntimeError):
    """The input coordinate covariance could not be factorized."""


class SigmaPointSingularityError(RuntimeError):
    """A sigma point landed on the logarithm branch boundary."""

    def __init__(self, index: int, pose: int, angle: float):
        self.index = index
        self.pose = pose
        super().__init__(
            f"sigma point {index} (pose block {pose}) hit the logarithm "
            f"singularity at rotation angle {angle!r}"
        )


@dataclass(frozen=True)
class UtConfig:
    """Unscented-transform weighting.

    ``standard`` follows Julier's original weights and needs ``dim + kappa >
    0``.  The default ``kappa = 0`` keeps every weight nonnegative for any
    stacked dimension (the classical ``kappa = 3 - dim`` choice goes negative
    for dim >= 3 and can produce indefinite outputs).  ``scaled`` uses the
    scaled-transform weights driven by ``alpha``/``beta`` on top of kappa.
    """

    kappa: float = 0.0
    mode: str = "standard"
    alpha: float = 1.0
    beta: float = 2.0

    def __post_init__(self):
        if self.mode not in ("standard", "scaled"):
            raise ValueError(f"unknown UT mode {self.mode!r}")
        if self.mode == "scaled" and self.alpha <= 0:
            raise ValueError("scaled mode needs alpha > 0")

    def spread_and_weights(self, dim: int) -> tuple[float, np.ndarray, np.ndarray]:
        """(squared point spread, mean weights, covariance weights) for ``dim``."""
        if self.mode == "standard":
            denom = dim + self.kappa
            if denom <= 0:
                raise ValueError(f"dim + kappa must be positive, got {denom}")
            w = np.full(2 * dim + 1, 1.0 / (2.0 * denom))
            w[0] = self.kappa / denom
            return denom, w, w.copy()
        lam = self.alpha ** 2 * (dim + self.kappa) - dim
        denom = dim + lam
        if denom <= 0:
            raise ValueError("alpha/kappa leave a non-positive point spread")
        wm = np.full(2 * dim + 1, 1.0 / (2.0 * denom))
        wc = wm.copy()
        wm[0] = lam / denom
        wc[0] = lam / denom + (1.0 - self.alpha ** 2 + self.beta)
        return denom, wm, wc


def _jittered_cholesky(cov: np.ndarray) -> np.ndarray:
    """Cholesky with up to 3 jitter retries of growing multiples of 1e-12*trace."""
    if not cov.any():
        return np.zeros_like(cov)
    eps = 1e-12 * float(np.trace(cov))
    for attempt in range(4):
        jitter = 0.0 if attempt == 0 else eps * 10.0 ** (attempt - 1)
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise ConversionError(
        f"coordinate covariance is not factorizable (trace {np.trace(cov):.3e})"
    )


def sigma_points(mean: np.ndarray, cov: np.ndarray, cfg: UtConfig):
    """Sigma point set and (mean, covariance) weights for a Gaussian."""
    dim = mean.shape[0]
    spread, wm, wc = cfg.spread_and_weights(dim)
    L = _jittered_cholesky(cov)
    offsets = np.sqrt(spread) * L
    points = np.empty((2 * dim + 1, dim))
    points[0] = mean
    points[1 : dim + 1] = mean[None, :] + offsets.T
    points[dim + 1 :] = mean[None, :] - offsets.T
    return points, wm, wc


def _stacked_log(point: np.ndarray, mean_inverses, k: int) -> np.ndarray:
    n = len(mean_inverses)
    out = np.empty(6 * n)
    for i in range(n):
        block = point[6 * i : 6 * i + 6]
        try:
            out[6 * i : 6 * i + 6] = log_map(ssc_to_pose(block) @ mean_inverses[i])
        except SingularLogError as e:
            raise SigmaPointSingularityError(k, i, e.angle) from None
    return out


def ut_convert(b: SscBelief, cfg: UtConfig = UtConfig()) -> JointPoseBelief:
    """Twist-space joint belief of an Euler-coordinate belief.

    Means map pose-wise through the coordinate-to-group function; the stacked
    covariance is the weighted outer-product sum of the identity-centered
    logs of all 12n + 1 sigma points.  The covariance sum is taken about zero
    (the central point maps to zero exactly); use :func:`ut_residual_mean` to
    inspect the size of the neglected weighted mean.
    """
    points, _, wc = sigma_points(b.mean, b.cov, cfg)
    means = [ssc_to_pose(b.pose_mean(i)) for i in range(b.n)]
    mean_inverses = [T.inverse() for T in means]
    dim = 6 * b.n
    cov = np.zeros((dim, dim))
    for k, (w, point) in enumerate(zip(wc, points)):
        if w == 0.0 or np.array_equal(point, points[0]):
            continue  # l of the central point is zero by construction
        ell = _stacked_log(point, mean_inverses, k)
        cov += w * np.outer(ell, ell)
    cov = 0.5 * (cov + cov.T)
    return JointPoseBelief(tuple(range(b.n)), means, cov)


def ut_residual_mean(b: SscBelief, cfg: UtConfig = UtConfig()) -> np.ndarray:
    """Weighted mean of the sigma-point logs (diagnostic).

    The covariance formula does not subtract this residual; its norm bounds
    the resulting bias and shrinks with the input covariance.
    """
    points, wm, _ = sigma_points(b.mean, b.cov, cfg)
    means = [ssc_to_pose(b.pose_mean(i)) for i in range(b.n)]
    mean_inverses = [T.inverse() for T in means]
    out = np.zeros(6 * b.n)
    for k, (w, point) in enumerate(zip(wm, points)):
        if w == 0.0:
            continue
        out += w * _stacked_log(point, mean_inverses, k)
    return out
