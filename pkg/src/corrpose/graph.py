"""Planar pose graphs: text-format ingestion, Gauss-Newton solving and
twist-space marginal covariance extraction.

The solver works on-manifold: vertex updates are left perturbations
``T <- exp(hat(delta)) @ T`` and edge residuals are
``log(Z^-1 (T_i^-1 T_j))`` whitened by the square root of the edge
information.  The gauge is fixed by a strong prior on the lowest-keyed
vertex.  Marginals are recovered from the information matrix assembled in
the same twist coordinates, so extracted pair beliefs feed the belief
module's between() directly.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .belief import PosePairBelief
from .liegroup import Pose, exp_map, exp_many, inv_many, log_many

# Central-difference step for twist-space residual Jacobians.
_JAC_STEP = 1e-6
# Information placed on each channel of the gauge prior.
_GAUGE_INFO = 1e8
# Below this many scalar variables the normal equations are solved densely.
_DENSE_LIMIT = 600


class GraphParseError(ValueError):
    """Malformed graph file; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class GraphValidationError(ValueError):
    """Structurally invalid graph (dangling edges, bad information, ...)."""


class GraphStateError(RuntimeError):
    """Operation requires a solved graph."""


class RankDeficiencyError(ArithmeticError):
    """Normal equations are singular."""


class DivergenceError(ArithmeticError):
    """Gauss-Newton chi2 increased three iterations in a row."""


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    measurement: Pose
    information: np.ndarray

    def __post_init__(self):
        info = np.asarray(self.information, dtype=float)
        if info.shape != (3, 3):
            raise GraphValidationError(f"edge ({self.i},{self.j}): information must be 3x3")
        if np.abs(info - info.T).max() > 1e-9 * max(1.0, np.abs(info).max()):
            raise GraphValidationError(f"edge ({self.i},{self.j}): information not symmetric")
        info = 0.5 * (info + info.T)
        if np.linalg.eigvalsh(info).min() < -1e-9 * max(1.0, np.abs(info).max()):
            raise GraphValidationError(f"edge ({self.i},{self.j}): information not PSD")
        info.flags.writeable = False
        object.__setattr__(self, "information", info)


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    initial_chi2: float
    final_chi2: float
    converged: bool


class PoseGraph:
    """Keyed SE(2) vertices plus relative-pose edges with information matrices."""

    def __init__(self, vertices: dict[int, Pose], edges: list[Edge], *,
                 skipped_lines: int = 0, solved: bool = False):
        self.vertices = dict(vertices)
        self.edges = list(edges)
        self.skipped_lines = int(skipped_lines)
        self.solved = bool(solved)
        for e in self.edges:
            if e.i == e.j:
                raise GraphValidationError(f"self-loop edge on vertex {e.i}")
            for k in (e.i, e.j):
                if k not in self.vertices:
                    raise GraphValidationError(f"edge references missing vertex {k}")
        for k, T in self.vertices.items():
            if T.dim != 2:
                raise GraphValidationError(f"vertex {k} is not planar")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        adj: dict[int, list[int]] = {k: [] for k in self.vertices}
        for e in self.edges:
            adj[e.i].append(e.j)
            adj[e.j].append(e.i)
        seen = set()
        stack = [next(iter(self.vertices))]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(adj[v])
        return len(seen) == len(self.vertices)


_VERTEX_TAGS = ("VERTEX_SE2", "VERTEX2")
_EDGE_TAGS = ("EDGE_SE2", "EDGE2")


def load_graph(path) -> PoseGraph:
    """Parse a planar g2o/TORO text file.

    ``VERTEX_SE2 id x y theta`` and ``EDGE_SE2 i j dx dy dtheta I11 I12 I13
    I22 I23 I33`` (upper-triangular information, row-major), with ``VERTEX2``
    / ``EDGE2`` accepted as aliases carrying the same payload order.  Lines
    starting with ``#`` are comments; unknown record types are skipped and
    counted on the returned graph.
    """
    vertices: dict[int, Pose] = {}
    edges: list[Edge] = []
    skipped = 0
    with open(path, "r", encoding="ascii") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tok = line.split()
            tag = tok[0]
            try:
                if tag in _VERTEX_TAGS:
                    if len(tok) != 5:
                        raise ValueError(f"expected 4 fields after {tag}, got {len(tok) - 1}")
                    key = int(tok[1])
                    x, y, th = (float(v) for v in tok[2:5])
                    vertices[key] = Pose.planar(x, y, th)
                elif tag in _EDGE_TAGS:
                    if len(tok) != 12:
                        raise ValueError(f"expected 11 fields after {tag}, got {len(tok) - 1}")
                    i, j = int(tok[1]), int(tok[2])
                    dx, dy, dth = (float(v) for v in tok[3:6])
                    u = [float(v) for v in tok[6:12]]
                    info = np.array(
                        [[u[0], u[1], u[2]], [u[1], u[3], u[4]], [u[2], u[4], u[5]]]
                    )
                    edges.append(Edge(i, j, Pose.planar(dx, dy, dth), info))
                else:
                    skipped += 1
            except (ValueError, OverflowError) as e:
                if isinstance(e, GraphValidationError):
                    raise
                raise GraphParseError(line_no, str(e)) from None
    return PoseGraph(vertices, edges, skipped_lines=skipped)


# ---------------------------------------------------------------------------
# linearization machinery shared by the solver and the marginal extraction
# ---------------------------------------------------------------------------

def _wrap(a: np.ndarray) -> np.ndarray:
    return np.arctan2(np.sin(a), np.cos(a))


class _System:
    """Vectorized residual/Jacobian evaluation in per-vertex twist coordinates."""

    def __init__(self, graph: PoseGraph, *, jacobian_mode: str = "numeric",
                 step: float = _JAC_STEP):
        if jacobian_mode not in ("numeric", "analytic"):
            raise ValueError(f"unknown jacobian_mode {jacobian_mode!r}")
        self.jacobian_mode = jacobian_mode
        self.step = step
        self.keys = sorted(graph.vertices)
        self.index = {k: i for i, k in enumerate(self.keys)}
        self.n = len(self.keys)
        self.ii = np.array([self.index[e.i] for e in graph.edges], dtype=int)
        self.jj = np.array([self.index[e.j] for e in graph.edges], dtype=int)
        if graph.edges:
            self.Zinv = np.stack([e.measurement.inverse().matrix() for e in graph.edges])
            # symmetric whitener W with r' info r == ||W r||^2; the eigh-based
            # square root also accepts PSD-singular information (pinned channels)
            infos = np.stack([e.information for e in graph.edges])
            w, V = np.linalg.eigh(infos)
            w = np.clip(w, 0.0, None)
            self.W = (V * np.sqrt(w)[:, None, :]) @ np.swapaxes(V, 1, 2)
        else:
            self.Zinv = np.zeros((0, 3, 3))
            self.W = np.zeros((0, 3, 3))
        self.anchor = 0  # lowest key after sorting
        self.prior_target_inv = graph.vertices[self.keys[0]].inverse().matrix()
        self.prior_w = np.sqrt(_GAUGE_INFO)

    def pose_matrices(self, graph: PoseGraph) -> np.ndarray:
        return np.stack([graph.vertices[k].matrix() for k in self.keys])

    def residuals(self, T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Raw (unwhitened) edge residuals (E, 3) and prior residual (3,)."""
        M = self.Zinv @ inv_many(T[self.ii]) @ T[self.jj]
        r = log_many(M)
        rp = log_many((T[self.anchor] @ self.prior_target_inv)[None])[0]
        return r, rp

    def chi2(self, T: np.ndarray) -> float:
        r, rp = self.residuals(T)
        rw = np.einsum("eab,eb->ea", self.W, r)
        return float((rw ** 2).sum() + (self.prior_w ** 2) * (rp ** 2).sum())

    # -- Jacobians ---------------------------------------------------------

    def _edge_jacobians_numeric(self, T: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        E = self.ii.shape[0]
        Ji = np.empty((E, 3, 3))
        Jj = np.empty((E, 3, 3))
        Jp = np.empty((3, 3))
        h = self.step
        Ti, Tj = T[self.ii], T[self.jj]
        Ta = T[self.anchor]
        for k in range(3):
            d = np.zeros(3)
            d[k] = h
            Ep = exp_many(d[None])[0]
            Em = exp_many(-d[None])[0]
            rp_ = log_many(self.Zinv @ inv_many(Ep @ Ti) @ Tj)
            rm_ = log_many(self.Zinv @ inv_many(Em @ Ti) @ Tj)
            diff = rp_ - rm_
            diff[:, 2] = _wrap(diff[:, 2])
            Ji[:, :, k] = diff / (2 * h)
            rp_ = log_many(self.Zinv @ inv_many(Ti) @ (Ep @ Tj))
            rm_ = log_many(self.Zinv @ inv_many(Ti) @ (Em @ Tj))
            diff = rp_ - rm_
            diff[:, 2] = _wrap(diff[:, 2])
            Jj[:, :, k] = diff / (2 * h)
            pp = log_many((Ep @ Ta @ self.prior_target_inv)[None])[0]
            pm = log_many((Em @ Ta @ self.prior_target_inv)[None])[0]
            dpr = pp - pm
            dpr[2] = _wrap(dpr[2])
            Jp[:, k] = dpr / (2 * h)
        return Ji, Jj, Jp

    def _edge_jacobians_analytic(self, T: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        # dr/dxi_j = Jr^-1(r) Ad(T_j^-1) and dr/dxi_i = -dr/dxi_j, where the
        # right-Jacobian inverse comes from a short series in ad(r).
        r, rp = self.residuals(T)
        Jr_inv = _inv_right_jacobian_many(r)
        Tj_inv = inv_many(T[self.jj])
        Jj = Jr_inv @ _adjoint_many(Tj_inv)
        Jp = _inv_right_jacobian_many(-rp[None])[0]  # left-Jacobian inverse
        return -Jj, Jj, Jp

    def assemble(self, T: np.ndarray) -> tuple[scipy.sparse.csr_matrix, np.ndarray]:
        """Whitened sparse Jacobian A and stacked rhs -r_w at linearization T."""
        if self.jacobian_mode == "numeric":
            Ji, Jj, Jp = self._edge_jacobians_numeric(T)
        else:
            Ji, Jj, Jp = self._edge_jacobians_analytic(T)
        r, rp = self.residuals(T)
        E = r.shape[0]
        Wi = self.W @ Ji
        Wj = self.W @ Jj
        rw = np.einsum("eab,eb->ea", self.W, r)

        rows_e = (3 * np.arange(E))[:, None, None] + np.arange(3)[:, None]
        rows = np.broadcast_to(rows_e, (E, 3, 3))
        cols_i = (3 * self.ii)[:, None, None] + np.arange(3)[None, None, :]
        cols_i = np.broadcast_to(cols_i, (E, 3, 3))
        cols_j = (3 * self.jj)[:, None, None] + np.arange(3)[None, None, :]
        cols_j = np.broadcast_to(cols_j, (E, 3, 3))

        prow = 3 * E + np.arange(3)
        pj = self.prior_w * Jp
        data = np.concatenate([Wi.ravel(), Wj.ravel(), pj.ravel()])
        rows_all = np.concatenate([rows.ravel(), rows.ravel(), np.repeat(prow, 3)])
        cols_all = np.concatenate(
            [cols_i.ravel(), cols_j.ravel(),
             np.tile(3 * self.anchor + np.arange(3), 3)]
        )
        A = scipy.sparse.coo_matrix(
            (data, (rows_all, cols_all)), shape=(3 * E + 3, 3 * self.n)
        ).tocsr()
        b = -np.concatenate([rw.ravel(), self.prior_w * rp])
        return A, b


def _adjoint_many(T: np.ndarray) -> np.ndarray:
    out = np.zeros((T.shape[0], 3, 3))
    out[:, :2, :2] = T[:, :2, :2]
    out[:, 0, 2] = T[:, 1, 2]
    out[:, 1, 2] = -T[:, 0, 2]
    out[:, 2, 2] = 1.0
    return out


def _ad_many(xi: np.ndarray) -> np.ndarray:
    out = np.zeros((xi.shape[0], 3, 3))
    out[:, 0, 1] = -xi[:, 2]
    out[:, 1, 0] = xi[:, 2]
    out[:, 0, 2] = xi[:, 1]
    out[:, 1, 2] = -xi[:, 0]
    return out


def _inv_right_jacobian_many(xi: np.ndarray, terms: int = 14) -> np.ndarray:
    """Inverse right Jacobian via the series Jr = sum (-ad)^k / (k+1)!."""
    ad = _ad_many(xi)
    J = np.broadcast_to(np.eye(3), ad.shape).copy()
    term = np.broadcast_to(np.eye(3), ad.shape).copy()
    for k in range(1, terms):
        term = term @ (-ad) / (k + 1.0)
        J = J + term
    return np.linalg.inv(J)


def _solve_normal_equations(A: scipy.sparse.csr_matrix, b: np.ndarray) -> np.ndarray:
    info = (A.T @ A).tocsc()
    rhs = A.T @ b
    if info.shape[0] < _DENSE_LIMIT:
        try:
            c = scipy.linalg.cho_factor(info.toarray())
            return scipy.linalg.cho_solve(c, rhs)
        except np.linalg.LinAlgError as e:
            raise RankDeficiencyError(str(e)) from None
    try:
        lu = scipy.sparse.linalg.splu(info, permc_spec="COLAMD")
    except RuntimeError as e:
        raise RankDeficiencyError(str(e)) from None
    return lu.solve(rhs)


def _renormalized(T: np.ndarray) -> np.ndarray:
    """Project the rotation blocks of an SE(2) matrix stack back onto SO(2)."""
    th = np.arctan2(T[:, 1, 0], T[:, 0, 0])
    out = T.copy()
    out[:, 0, 0] = np.cos(th)
    out[:, 0, 1] = -np.sin(th)
    out[:, 1, 0] = np.sin(th)
    out[:, 1, 1] = np.cos(th)
    out[:, 2, :2] = 0.0
    out[:, 2, 2] = 1.0
    return out


def solve(graph: PoseGraph, *, max_iterations: int = 100, rel_tol: float = 1e-9,
          jacobian_mode: str = "numeric") -> tuple[PoseGraph, SolveReport]:
    """Gauss-Newton with on-manifold updates and a gauge prior on the lowest key.

    Returns a solved copy of the graph plus a report.  Terminates on relative
    chi2 decrease below ``rel_tol`` or the iteration cap; three consecutive
    chi2 increases raise :class:`DivergenceError`.
    """
    if not graph.is_connected():
        raise GraphValidationError("graph is not connected")
    sys_ = _System(graph, jacobian_mode=jacobian_mode)
    T = sys_.pose_matrices(graph)
    chi2 = sys_.chi2(T)
    initial = chi2
    best_chi2, best_T = chi2, T.copy()
    converged = chi2 < 1e-15
    iterations = 0
    increases = 0
    while not converged and iterations < max_iterations:
        A, b = sys_.assemble(T)
        delta = _solve_normal_equations(A, b)
        T = _renormalized(exp_many(delta.reshape(sys_.n, 3)) @ T)
        iterations += 1
        new_chi2 = sys_.chi2(T)
        if new_chi2 > chi2:
            increases += 1
            if increases >= 3:
                raise DivergenceError(
                    f"chi2 rose three consecutive iterations (now {new_chi2:.6e})"
                )
        else:
            increases = 0
        if new_chi2 < best_chi2:
            best_chi2, best_T = new_chi2, T.copy()
        rel_decrease = (chi2 - new_chi2) / max(chi2, 1e-300)
        chi2 = new_chi2
        if 0.0 <= rel_decrease < rel_tol or new_chi2 < 1e-15:
            converged = True
    vertices = {
        k: Pose(best_T[idx, :2, :2], best_T[idx, :2, 2])
        for k, idx in sys_.index.items()
    }
    solved = PoseGraph(vertices, graph.edges, skipped_lines=graph.skipped_lines,
                       solved=True)
    report = SolveReport(iterations, initial, best_chi2, converged)
    return solved, report


class Marginals:
    """Shared factorization of the twist-space information matrix.

    Build once per solved graph, then query any number of pair marginals;
    queries only trigger sparse solves for the requested columns.
    """

    def __init__(self, graph: PoseGraph, *, jacobian_mode: str = "numeric"):
        if not graph.solved:
            raise GraphStateError("marginals need a solved graph; call solve() first")
        self._graph = graph
        self._sys = _System(graph, jacobian_mode=jacobian_mode)
        # SuperLU solves are not guaranteed re-entrant; serialize them so one
        # Marginals instance can serve concurrent pair queries
        self._lock = threading.Lock()
        T = self._sys.pose_matrices(graph)
        A, _ = self._sys.assemble(T)
        info = (A.T @ A).tocsc()
        self._nvars = info.shape[0]
        if self._nvars < _DENSE_LIMIT:
            try:
                self._dense = scipy.linalg.cho_factor(info.toarray())
            except np.linalg.LinAlgError as e:
                raise RankDeficiencyError(str(e)) from None
            self._lu = None
        else:
            try:
                self._lu = scipy.sparse.linalg.splu(info, permc_spec="COLAMD")
            except RuntimeError as e:
                raise RankDeficiencyError(str(e)) from None
            self._dense = None

    def _solve_columns(self, cols: np.ndarray) -> np.ndarray:
        E = np.zeros((self._nvars, cols.shape[0]))
        E[cols, np.arange(cols.shape[0])] = 1.0
        if self._dense is not None:
            return scipy.linalg.cho_solve(self._dense, E)
        with self._lock:
            return np.column_stack(
                [self._lu.solve(E[:, k]) for k in range(E.shape[1])]
            )

    def pair_belief(self, i: int, j: int) -> PosePairBelief:
        """Joint 6x6 twist covariance (and means) of vertices i and j."""
        if i == j:
            raise ValueError("a pose pair needs two distinct vertices")
        for k in (i, j):
            if k not in self._sys.index:
                raise KeyError(f"unknown vertex {k}")
        ci = 3 * self._sys.index[i] + np.arange(3)
        cj = 3 * self._sys.index[j] + np.arange(3)
        cols = np.concatenate([ci, cj])
        X = self._solve_columns(cols)
        cov = X[cols, :]
        cov = 0.5 * (cov + cov.T)
        return PosePairBelief(
            (self._graph.vertices[i], self._graph.vertices[j]), cov
        )


def extract_pair_belief(graph: PoseGraph, i: int, j: int) -> PosePairBelief:
    """One-shot pair marginal; use :class:`Marginals` for repeated queries."""
    return Marginals(graph).pair_belief(i, j)


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

def generate_grid_world(n_poses: int = 500, seed=0, *, trans_sigma: float = 0.14,
                        rot_sigma: float = 0.1, loop_prob: float = 0.5,
                        min_loop_gap: int = 20, step_length: float = 1.0) -> PoseGraph:
    """Manhattan-style random-walk pose graph with odometry and loop closures.

    Ground-truth motion lives on an integer grid with 90-degree turns.  Every
    measurement is the true relative pose left-perturbed by Gaussian noise
    drawn from the edge's noise model (default sigmas match the public
    Manhattan benchmark's information matrices); vertex initial values
    integrate the noisy odometry.  Deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    q = np.array([trans_sigma, trans_sigma, rot_sigma])
    info = np.diag(1.0 / q ** 2)

    gt = [Pose.identity(2)]
    cells = {(0, 0): [0]}
    loops: list[tuple[int, int]] = []
    for k in range(1, n_poses):
        turn = rng.choice([0.0, np.pi / 2, -np.pi / 2], p=[0.6, 0.2, 0.2])
        motion = Pose.planar(
            step_length * np.cos(turn), step_length * np.sin(turn), turn
        )
        pose = gt[-1] @ motion
        gt.append(pose)
        cell = (int(round(pose.t[0])), int(round(pose.t[1])))
        for prev in cells.get(cell, []):
            if k - prev >= min_loop_gap and rng.uniform() < loop_prob:
                loops.append((prev, k))
                break
        cells.setdefault(cell, []).append(k)

    def noisy(rel: Pose) -> Pose:
        return exp_map(rng.normal(0.0, q)) @ rel

    edges = []
    for k in range(n_poses - 1):
        rel = gt[k].inverse() @ gt[k + 1]
        edges.append(Edge(k, k + 1, noisy(rel), info))
    for a, b in loops:
        rel = gt[a].inverse() @ gt[b]
        edges.append(Edge(a, b, noisy(rel), info))

    vertices = {0: gt[0]}
    odo = {(e.i, e.j): e.measurement for e in edges[: n_poses - 1]}
    for k in range(1, n_poses):
        vertices[k] = vertices[k - 1] @ odo[(k - 1, k)]
    return PoseGraph(vertices, edges)
