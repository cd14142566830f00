"""Assembly of the augmented constraint Jacobian, the full-column-rank test
deciding finite solvability, kernel-based extraction of maximal
finite-solvable components, and an exact finite-field cross-check.

For a graph with n nodes and m edges the augmented Jacobian J has
``10*m + n + 15`` rows and ``12*n`` columns:

  * 10 rows per edge: derivatives of the compatibility residual with
    respect to the two incident cameras (10x12 blocks in the two node
    column groups);
  * 12 rows pinning the first gauge camera to [I | 0];
  * 4 rows pinning the first row of the second gauge camera;
  * one scale row (all ones over a camera's 12 columns) for every node
    except the first gauge camera.

J has full column rank at a generic configuration exactly when the graph is
finite solvable, i.e. when the camera-block Jacobian of the edge constraints
reaches rank 11n - 15.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .calculus import vech_sym_operator
from .geometry import (
    CameraConfiguration,
    DegenerateConfigurationError,
    FundamentalAssignment,
    fundamental_assignment,
    random_generic_configuration,
)
from .graph import ViewingGraph

__all__ = [
    "DEFAULT_TOLERANCE",
    "DEFAULT_PRIME",
    "RankComputationError",
    "RowBlock",
    "JacobianSystem",
    "SolvabilityReport",
    "Component",
    "ComponentPartition",
    "derive_seeds",
    "assemble_jacobian",
    "is_full_column_rank",
    "null_space_basis",
    "finite_solvability",
    "maximal_components",
    "finite_field_rank",
    "matrix_dims",
    "export_matrix_market",
]

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MASTER_SEED = 42
DEFAULT_SEED_COUNT = 5
# modular prime: small enough that a*b and 3-term dot products fit in int64
DEFAULT_PRIME = 1_000_000_007

NODE_BLOCK_REL_TOL = 1e-6  # a 12-row kernel block below this (relative) is "zero"
_RESIDUAL_CHECK_TOL = 1e-8
_DENSE_SVD_MAX_ENTRIES = 40_000_000
_DENSE_EIG_MAX_COLS = 8_000


class RankComputationError(RuntimeError):
    """The iterative eigensolver failed on a system too large for the dense path."""


def derive_seeds(master: int = DEFAULT_MASTER_SEED, count: int = DEFAULT_SEED_COUNT) -> tuple[int, ...]:
    """Derive a reproducible list of independent RNG seeds from one master seed."""
    if count < 1:
        raise ValueError("need at least one seed")
    state = np.random.SeedSequence(master).generate_state(count)
    return tuple(int(x) for x in state)


@dataclass(frozen=True)
class RowBlock:
    """Provenance of a contiguous row range of the assembled Jacobian.

    ``kind`` is one of 'edge-constraint', 'gauge-P1', 'gauge-P2-row',
    'scale'; ``ref`` is the edge index or node index the block came from.
    """

    kind: str
    ref: int
    start: int
    count: int


@dataclass(frozen=True)
class JacobianSystem:
    """Sparse augmented Jacobian with its provenance."""

    matrix: sp.csr_matrix
    graph: ViewingGraph
    gauge_edge: tuple[int, int]
    config_seed: int
    blocks: tuple[RowBlock, ...]

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]


def assemble_jacobian(
    g: ViewingGraph,
    config: CameraConfiguration,
    fmats: FundamentalAssignment,
    gauge_edge: tuple[int, int] | None = None,
) -> JacobianSystem:
    """Build the augmented sparse Jacobian for a generic configuration.

    ``fmats`` must be the fundamental matrices of ``config`` on this graph;
    the compatibility residual of every edge is re-checked before the system
    is accepted.  ``gauge_edge`` defaults to the lexicographically first
    edge; its endpoints absorb the global projective ambiguity.
    """
    n, m = g.node_count, g.edge_count
    if m == 0:
        raise ValueError("cannot assemble a Jacobian for a graph without edges")
    if fmats.edge_count != m:
        raise ValueError("fundamental assignment length does not match edge count")
    if gauge_edge is None:
        gauge_edge = min(g.edges)
    a, b = min(gauge_edge), max(gauge_edge)
    if (a, b) not in g.edge_index:
        raise ValueError(f"gauge edge {gauge_edge} is not an edge of the graph")

    cams = config.cameras
    F = fmats.matrices
    ei = np.array([e[0] for e in g.edges])
    ej = np.array([e[1] for e in g.edges])
    Pi = cams[ei]
    Pj = cams[ej]

    # the fundamental matrices must be compatible with the configuration
    S = np.einsum("eka,ekl,elb->eab", Pj, F, Pi)
    worst = float(np.abs(S + S.transpose(0, 2, 1)).max(initial=0.0))
    scale = float(
        (np.linalg.norm(Pi, axis=(1, 2)) * np.linalg.norm(Pj, axis=(1, 2))
         * np.linalg.norm(F, axis=(1, 2))).max(initial=1.0)
    )
    if worst > _RESIDUAL_CHECK_TOL * scale:
        raise ValueError(
            "fundamental matrices are not compatible with the configuration "
            f"(residual {worst:.3e})"
        )

    # edge blocks: 10x12 derivative of the residual w.r.t. each camera.
    # C4 reshapes the 10x16 operator so C @ kron(I4, A) becomes one einsum.
    C4 = vech_sym_operator(4).reshape(10, 4, 4)
    PjTF = np.einsum("eka,ekl->eal", Pj, F)                     # (m, 4, 3)
    FPiT = np.einsum("ekl,elb->ekb", F, Pi).transpose(0, 2, 1)  # (m, 4, 3)
    block_i = np.einsum("rab,ebc->erac", C4, PjTF).reshape(m, 10, 12)
    block_j = np.einsum("rab,ebc->erac", C4, FPiT).reshape(m, 10, 12)

    row_base = (10 * np.arange(m))[:, None, None] + np.arange(10)[None, :, None]
    col_i = (12 * ei)[:, None, None] + np.arange(12)[None, None, :]
    col_j = (12 * ej)[:, None, None] + np.arange(12)[None, None, :]
    shape3 = (m, 10, 12)
    rows_idx = [np.broadcast_to(row_base, shape3).ravel()] * 2
    cols_idx = [np.broadcast_to(col_i, shape3).ravel(),
                np.broadcast_to(col_j, shape3).ravel()]
    data = [block_i.ravel(), block_j.ravel()]

    # gauge rows: fix camera a entrywise, then the first row of camera b
    r0 = 10 * m
    rows_idx.append(r0 + np.arange(12))
    cols_idx.append(12 * a + np.arange(12))
    data.append(np.ones(12))
    r1 = r0 + 12
    rows_idx.append(r1 + np.arange(4))
    cols_idx.append(12 * b + 3 * np.arange(4))  # vec index of entry (0, c) is 3c
    data.append(np.ones(4))

    # scale rows: sum of entries pinned for every camera except a
    r2 = r1 + 4
    others = [v for v in range(n) if v != a]
    rows_sc = np.repeat(r2 + np.arange(len(others)), 12)
    cols_sc = (12 * np.array(others))[:, None] + np.arange(12)[None, :]
    rows_idx.append(rows_sc)
    cols_idx.append(cols_sc.ravel())
    data.append(np.ones(12 * len(others)))

    total_rows = 10 * m + n + 15
    matrix = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows_idx), np.concatenate(cols_idx))),
        shape=(total_rows, 12 * n),
    ).tocsr()

    blocks = [RowBlock("edge-constraint", k, 10 * k, 10) for k in range(m)]
    blocks.append(RowBlock("gauge-P1", a, r0, 12))
    blocks.append(RowBlock("gauge-P2-row", b, r1, 4))
    blocks.extend(RowBlock("scale", v, r2 + k, 1) for k, v in enumerate(others))

    return JacobianSystem(
        matrix=matrix,
        graph=g,
        gauge_edge=(a, b),
        config_seed=config.seed,
        blocks=tuple(blocks),
    )


def export_matrix_market(system: JacobianSystem, path: str) -> None:
    """Write the sparse Jacobian in Matrix Market coordinate format."""
    scipy.io.mmwrite(path, system.matrix.tocoo())


def _sigma_extremes(J: sp.csr_matrix) -> tuple[float, float]:
    """Smallest and largest singular values of J, column-rank flavored:
    for a matrix with fewer rows than columns the smallest value is 0."""
    rows, cols = J.shape
    if rows * cols <= _DENSE_SVD_MAX_ENTRIES:
        s = np.linalg.svd(J.toarray(), compute_uv=False)
        smax = float(s[0]) if s.size else 0.0
        smin = float(s[-1]) if rows >= cols else 0.0
        return smin, smax
    JtJ = (J.T @ J).tocsc()
    try:
        lmax = float(
            scipy.sparse.linalg.eigsh(JtJ, k=1, which="LA", return_eigenvectors=False)[0]
        )
    except scipy.sparse.linalg.ArpackError as exc:  # pragma: no cover
        raise RankComputationError(f"largest-eigenvalue iteration failed: {exc}") from exc
    smax = float(np.sqrt(max(lmax, 0.0)))
    if cols <= _DENSE_EIG_MAX_COLS:
        _, v = scipy.linalg.eigh(JtJ.toarray(), subset_by_index=[0, 0])
        # the eigenvector direction is accurate even when the eigenvalue
        # itself drowns in squared-condition rounding; |J v| recovers sigma
        smin = float(np.linalg.norm(J @ v[:, 0]))
        return smin, smax
    try:
        w, v = scipy.sparse.linalg.eigsh(JtJ, k=1, which="SA", maxiter=50 * JtJ.shape[0])
    except (scipy.sparse.linalg.ArpackError, scipy.sparse.linalg.ArpackNoConvergence) as exc:
        raise RankComputationError(
            f"smallest-eigenvalue iteration failed on a {rows}x{cols} system: {exc}"
        ) from exc
    smin = float(np.linalg.norm(J @ v[:, 0]))
    return smin, smax


def is_full_column_rank(
    system: JacobianSystem, tolerance: float = DEFAULT_TOLERANCE
) -> tuple[bool, float, float]:
    """Test sigma_min(J) > tolerance * sigma_max(J).

    Uses a dense SVD for small systems and the smallest eigenpair of J^T J
    (with an |J v| refinement) for large sparse ones.  A system with fewer
    rows than columns can never have full column rank and reports
    sigma_min = 0.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    smin, smax = _sigma_extremes(system.matrix)
    full = smax > 0 and smin > tolerance * smax
    return bool(full), smin, smax


def null_space_basis(
    system: JacobianSystem, tolerance: float = DEFAULT_TOLERANCE
) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of J (12n x k).

    Kernel directions are right singular vectors with sigma <= tolerance *
    sigma_max; a finite-solvable system yields k = 0.
    """
    J = system.matrix
    rows, cols = J.shape
    if rows * cols <= _DENSE_SVD_MAX_ENTRIES:
        A = J.toarray()
        if rows < cols:
            # pad with zero rows so the SVD exposes the full right basis
            A = np.vstack([A, np.zeros((cols - rows, cols))])
        _, s, Vt = np.linalg.svd(A, full_matrices=False)
        smax = s[0] if s.size else 0.0
        keep = int(np.sum(s > tolerance * smax)) if smax > 0 else 0
        return Vt[keep:].T.copy()
    JtJ = (J.T @ J).tocsc()
    if cols > _DENSE_EIG_MAX_COLS:
        raise RankComputationError(
            f"kernel computation beyond the dense cap ({cols} columns)"
        )
    w, V = scipy.linalg.eigh(JtJ.toarray())
    smax = float(np.sqrt(max(w[-1], 0.0)))
    if smax == 0.0:
        return V
    # generous eigenvalue pre-filter, then the exact |J v| criterion
    coarse = w <= (100.0 * tolerance * smax) ** 2
    cand = V[:, coarse]
    resid = np.linalg.norm((J @ cand), axis=0)
    return cand[:, resid <= tolerance * smax].copy()


@dataclass(frozen=True)
class SolvabilityReport:
    """Outcome of the finite-solvability decision for one graph."""

    finite_solvable: bool
    rank_jp: int
    expected_rank: int
    sigma_min: float
    sigma_max: float
    tolerance: float
    seeds: tuple[int, ...]
    agreement: tuple[bool, ...]
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "finite_solvable": self.finite_solvable,
            "rank_jp": self.rank_jp,
            "expected_rank": self.expected_rank,
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "tolerance": self.tolerance,
            "seeds": list(self.seeds),
            "agreement": list(self.agreement),
            "wall_time": self.wall_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _assemble_for_seed(
    g: ViewingGraph, seed: int, gauge_edge: tuple[int, int] | None
) -> JacobianSystem:
    config = random_generic_configuration(g, seed)
    fmats = fundamental_assignment(g, config)
    return assemble_jacobian(g, config, fmats, gauge_edge)


def finite_solvability(
    g: ViewingGraph,
    seeds: list[int] | tuple[int, ...] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> SolvabilityReport:
    """Decide finite solvability by the full-rank test at random generic
    configurations, one per seed, with a majority vote across seeds.

    Disconnected graphs come out rank-deficient automatically (the extra
    pieces keep their own projective freedom), so no special casing is
    needed; per-piece structure is available from maximal_components.
    """
    if seeds is None:
        seeds = derive_seeds()
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("seed list must not be empty")
    if g.edge_count == 0:
        raise ValueError("graph has no edges")
    n = g.node_count
    t0 = time.perf_counter()
    verdicts: list[bool] = []
    sigmas: list[tuple[float, float]] = []
    for seed in seeds:
        system = _assemble_for_seed(g, seed, None)
        full, smin, smax = is_full_column_rank(system, tolerance)
        verdicts.append(full)
        sigmas.append((smin, smax))
    majority = sum(verdicts) * 2 > len(verdicts)
    expected = 11 * n - 15
    if majority:
        rank_jp = expected
    else:
        # recover the rank from the kernel of a representative seed
        rep = seeds[verdicts.index(majority)]
        kernel = null_space_basis(_assemble_for_seed(g, rep, None), tolerance)
        rank_jp = expected - kernel.shape[1]
    smin, smax = sigmas[-1]
    return SolvabilityReport(
        finite_solvable=majority,
        rank_jp=rank_jp,
        expected_rank=expected,
        sigma_min=smin,
        sigma_max=smax,
        tolerance=tolerance,
        seeds=seeds,
        agreement=tuple(verdicts),
        wall_time=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class Component:
    """One maximal finite-solvable component: edge indices into the parent
    graph's edge list plus the nodes those edges touch."""

    edges: tuple[int, ...]
    nodes: tuple[int, ...]


@dataclass(frozen=True)
class ComponentPartition:
    """Partition of the edge set into maximal finite-solvable components.

    Every edge belongs to exactly one component; node sets may overlap (cut
    vertices belong to several components).
    """

    components: tuple[Component, ...]
    assignment: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "components": [
                {"edges": list(c.edges), "nodes": list(c.nodes)} for c in self.components
            ],
            "assignment": list(self.assignment),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _iteration_seed(master: int, iteration: int) -> int:
    return int(np.random.SeedSequence((master, iteration)).generate_state(1)[0])


def maximal_components(
    g: ViewingGraph,
    seeds: list[int] | tuple[int, ...] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    node_block_tol: float = NODE_BLOCK_REL_TOL,
) -> ComponentPartition:
    """Partition the edges into maximal finite-solvable components.

    Iteratively: gauge on the first unassigned edge, restrict to its
    connected piece of the remaining subgraph, compute the kernel of the
    augmented Jacobian, collect the nodes whose 12-row kernel blocks vanish,
    and assign every remaining edge with both endpoints among them.  A
    finite-solvable graph yields a single component holding all edges.
    """
    master = int(seeds[0]) if seeds else derive_seeds()[0]
    m = g.edge_count
    assignment = [-1] * m
    components: list[Component] = []
    iteration = 0
    while True:
        try:
            first = assignment.index(-1)
        except ValueError:
            break
        # connected piece (over remaining edges) containing the gauge edge
        remaining = [k for k in range(m) if assignment[k] == -1]
        adj: dict[int, list[int]] = {}
        for k in remaining:
            i, j = g.edges[k]
            adj.setdefault(i, []).append(k)
            adj.setdefault(j, []).append(k)
        seen_nodes = set(g.edges[first])
        frontier = list(seen_nodes)
        piece_edges: set[int] = set()
        while frontier:
            v = frontier.pop()
            for k in adj.get(v, ()):
                piece_edges.add(k)
                for w in g.edges[k]:
                    if w not in seen_nodes:
                        seen_nodes.add(w)
                        frontier.append(w)
        sub_edge_ids = sorted(piece_edges)
        sub_nodes = sorted(seen_nodes)
        relabel = {v: t for t, v in enumerate(sub_nodes)}
        sub = ViewingGraph(
            len(sub_nodes),
            tuple((relabel[g.edges[k][0]], relabel[g.edges[k][1]]) for k in sub_edge_ids),
        )
        gauge = (relabel[g.edges[first][0]], relabel[g.edges[first][1]])
        system = _assemble_for_seed(sub, _iteration_seed(master, iteration), gauge)
        kernel = null_space_basis(system, tolerance)
        if kernel.shape[1] == 0:
            zero_local = set(range(len(sub_nodes)))
        else:
            blocks = kernel.reshape(len(sub_nodes), 12, -1)
            norms = np.linalg.norm(blocks, axis=(1, 2))
            zero_local = set(np.nonzero(norms <= node_block_tol * norms.max())[0].tolist())
        comp_edges = [
            k
            for k in sub_edge_ids
            if relabel[g.edges[k][0]] in zero_local and relabel[g.edges[k][1]] in zero_local
        ]
        if not comp_edges:
            raise RuntimeError(
                "component iteration assigned no edges; kernel thresholds are off"
            )
        cid = len(components)
        for k in comp_edges:
            assignment[k] = cid
        nodes = sorted({v for k in comp_edges for v in g.edges[k]})
        components.append(Component(edges=tuple(comp_edges), nodes=tuple(nodes)))
        iteration += 1
    return ComponentPartition(components=tuple(components), assignment=tuple(assignment))


# ---------------------------------------------------------------------------
# exact rank over GF(p): an independent cross-check of the floating verdict


def _det3_mod(r0, r1, r2, p: int) -> int:
    a, b, c = r0
    d, e, f = r1
    g_, h, i = r2
    return (a * (e * i - f * h) - b * (d * i - f * g_) + c * (d * h - e * g_)) % p


def _det4_mod(mat, p: int) -> int:
    total = 0
    rows = mat[1:]
    for c in range(4):
        minor = [[row[cc] for cc in range(4) if cc != c] for row in rows]
        term = mat[0][c] * _det3_mod(*minor, p)
        total += term if c % 2 == 0 else -term
    return total % p


def _fundamental_mod(Pi, Pj, p: int) -> list[list[int]]:
    F = [[0] * 3 for _ in range(3)]
    for h in range(3):
        rows_j = [Pj[r] for r in range(3) if r != h]
        for k in range(3):
            rows_i = [Pi[r] for r in range(3) if r != k]
            d = _det4_mod(rows_i + rows_j, p)
            F[h][k] = d if (h + k) % 2 == 0 else (-d) % p
    return F


def _rank_mod_p(M: np.ndarray, p: int) -> int:
    """Row-echelon rank over GF(p); M is int64 with entries in [0, p)."""
    M = M % p
    rows, cols = M.shape
    r = 0
    for c in range(cols):
        pivots = np.nonzero(M[r:, c])[0]
        if pivots.size == 0:
            continue
        piv = r + int(pivots[0])
        if piv != r:
            M[[r, piv]] = M[[piv, r]]
        inv = pow(int(M[r, c]), p - 2, p)
        M[r] = (M[r] * inv) % p
        below = M[r + 1 :, c]
        nz = np.nonzero(below)[0]
        if nz.size:
            M[r + 1 + nz] = (M[r + 1 + nz] - np.outer(below[nz], M[r])) % p
        r += 1
        if r == rows:
            break
    return r


def finite_field_rank(
    g: ViewingGraph, prime: int = DEFAULT_PRIME, seed: int = 0
) -> int:
    """Rank over GF(prime) of the augmented Jacobian at uniformly random
    field cameras.  All block formulas are polynomial, so the evaluation is
    exact; full rank (12n) certifies the floating-point verdict.
    """
    if prime <= 2**20:
        raise ValueError("prime must exceed 2^20")
    if g.edge_count == 0:
        raise ValueError("graph has no edges")
    n, m = g.node_count, g.edge_count
    rng = np.random.default_rng(seed)
    C_INT = np.rint(vech_sym_operator(4)).astype(np.int64)  # entries 0/1/2
    I4 = np.eye(4, dtype=np.int64)
    for _ in range(16):
        cams = rng.integers(0, prime, size=(n, 3, 4), dtype=np.int64)
        cam_lists = [[[int(x) for x in row] for row in cam] for cam in cams]
        fmods = []
        ok = True
        for i, j in g.edges:
            F = _fundamental_mod(cam_lists[i], cam_lists[j], prime)
            if not any(any(row) for row in F):
                ok = False
                break
            fmods.append(np.array(F, dtype=np.int64))
        if not ok:
            continue
        rows = 10 * m + n + 15
        J = np.zeros((rows, 12 * n), dtype=np.int64)
        for k, (i, j) in enumerate(g.edges):
            F = fmods[k]
            PjTF = (cams[j].T @ F) % prime       # 4x3, 3-term dots stay < 2^63
            FPiT = ((F @ cams[i]) % prime).T     # 4x3
            bi = (C_INT @ np.kron(I4, PjTF)) % prime
            bj = (C_INT @ np.kron(I4, FPiT)) % prime
            J[10 * k : 10 * k + 10, 12 * i : 12 * i + 12] = bi
            J[10 * k : 10 * k + 10, 12 * j : 12 * j + 12] = bj
        a, b = min(g.edges)
        r0 = 10 * m
        for t in range(12):
            J[r0 + t, 12 * a + t] = 1
        for c in range(4):
            J[r0 + 12 + c, 12 * b + 3 * c] = 1
        r2 = r0 + 16
        others = [v for v in range(n) if v != a]
        for t, v in enumerate(others):
            J[r2 + t, 12 * v : 12 * v + 12] = 1
        return _rank_mod_p(J, prime)
    raise DegenerateConfigurationError(
        "kept drawing zero fundamental matrices over the field"
    )


def matrix_dims(g: ViewingGraph) -> dict[str, float | int]:
    """Row/column counts of the three known solvability formulations.

    ``e1`` (exact, needs the degree sequence) and ``e1_lower_bound`` describe
    the per-node-pair system with v1 = 16m unknowns; ``e2`` the reduced
    edge-based system with the same unknowns; ``e3`` x ``v3`` is the system
    assembled by this package.
    """
    n, m = g.node_count, g.edge_count
    deg_sq = sum(d * d for d in g.degrees)
    return {
        "e1": 10 * deg_sq - 19 * m + 15,
        "e1_lower_bound": 40.0 * m * m / n - 19 * m + 15,
        "e2": 23 * m - 11 * n + 15,
        "e3": 10 * m + n + 15,
        "v12": 16 * m,
        "v3": 12 * n,
    }
