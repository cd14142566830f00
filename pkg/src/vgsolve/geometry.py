"""Cameras, the pairwise fundamental-matrix map, and the skew-symmetry
compatibility residual linking fundamental matrices to camera pairs.

Conventions: cameras are 3x4 full-rank matrices up to scale; the
fundamental matrix F of an ordered pair (P_i, P_j) satisfies the epipolar
identity (P_j X)^T F (P_i X) = 0 for every world point X, and
S = P_j^T F P_i is skew-symmetric.  Entrywise,

    F[h, k] = (-1)^(h+k) * det [ P_i without row k ]
                               [ P_j without row h ].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import vech
from .graph import ViewingGraph

__all__ = [
    "CoincidentCentersError",
    "DegenerateConfigurationError",
    "CameraConfiguration",
    "FundamentalAssignment",
    "fundamental_matrix",
    "fundamental_assignment",
    "compatibility_residual",
    "random_generic_configuration",
    "normalize_projective",
]

# |F| <= this * |P_i| * |P_j| (Frobenius) is treated as the zero matrix,
# i.e. coincident camera centers.
COINCIDENT_CENTERS_REL_TOL = 1e-12
GENERIC_RETRIES = 16
_CAMERA_RANK_REL_TOL = 1e-8


class CoincidentCentersError(ValueError):
    """The two cameras share a center; the fundamental matrix is undefined."""


class DegenerateConfigurationError(RuntimeError):
    """Random redraws kept producing a degenerate configuration.

    With entries from a continuous distribution this has probability zero,
    so exhausting the retry budget points at a bug or a broken RNG."""


@dataclass(frozen=True)
class CameraConfiguration:
    """One 3x4 camera per node, plus the seed that generated them."""

    cameras: np.ndarray  # (n, 3, 4), read-only
    seed: int

    def __post_init__(self):
        cams = np.asarray(self.cameras, dtype=float)
        if cams.ndim != 3 or cams.shape[1:] != (3, 4):
            raise ValueError(f"expected (n, 3, 4) camera array, got {cams.shape}")
        cams = cams.copy()
        cams.setflags(write=False)
        object.__setattr__(self, "cameras", cams)

    @property
    def node_count(self) -> int:
        return self.cameras.shape[0]

    def to_lists(self) -> list[list[float]]:
        """Row-major entry lists, one per camera (debugging aid)."""
        return [cam.reshape(-1).tolist() for cam in self.cameras]


@dataclass(frozen=True)
class FundamentalAssignment:
    """Per-edge fundamental matrices, ordered like the graph's edge list."""

    matrices: np.ndarray  # (m, 3, 3), read-only, unit Frobenius norm each

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1:] != (3, 3):
            raise ValueError(f"expected (m, 3, 3) array, got {mats.shape}")
        mats = mats.copy()
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)

    @property
    def edge_count(self) -> int:
        return self.matrices.shape[0]


def _fundamental_minors(Pi: np.ndarray, Pj: np.ndarray) -> np.ndarray:
    """Unnormalized fundamental matrices for batched camera pairs.

    Pi, Pj have shape (..., 3, 4); the result has shape (..., 3, 3) with
    entry (h, k) equal to (-1)^(h+k) times the determinant of P_i with row k
    removed stacked over P_j with row h removed.
    """
    Pi = np.asarray(Pi, dtype=float)
    Pj = np.asarray(Pj, dtype=float)
    out = np.empty(Pi.shape[:-2] + (3, 3))
    for h in range(3):
        top_j = np.delete(Pj, h, axis=-2)
        for k in range(3):
            top_i = np.delete(Pi, k, axis=-2)
            stacked = np.concatenate([top_i, top_j], axis=-2)
            out[..., h, k] = (-1.0) ** (h + k) * np.linalg.det(stacked)
    return out


def normalize_projective(M: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rescale to unit Frobenius norm with the first nonzero entry (row-major
    scan) positive, giving a unique representative of the projective class."""
    M = np.asarray(M, dtype=float)
    norm = np.linalg.norm(M)
    if norm == 0.0:
        raise ValueError("cannot normalize the zero matrix")
    out = M / norm
    flat = out.reshape(-1)
    nz = np.nonzero(np.abs(flat) > tol)[0]
    lead = flat[nz[0]] if nz.size else flat[np.argmax(np.abs(flat))]
    return -out if lead < 0 else out


def fundamental_matrix(P_i: np.ndarray, P_j: np.ndarray) -> np.ndarray:
    """Fundamental matrix of an ordered camera pair, normalized projectively.

    Raises CoincidentCentersError when the minors all vanish, which happens
    exactly when the cameras share a center.
    """
    P_i = np.asarray(P_i, dtype=float)
    P_j = np.asarray(P_j, dtype=float)
    F = _fundamental_minors(P_i, P_j)
    scale = np.linalg.norm(P_i) * np.linalg.norm(P_j)
    if np.linalg.norm(F) <= COINCIDENT_CENTERS_REL_TOL * scale:
        raise CoincidentCentersError("cameras have coincident centers")
    return normalize_projective(F)


def fundamental_assignment(g: ViewingGraph, config: CameraConfiguration) -> FundamentalAssignment:
    """Evaluate the fundamental matrix on every edge of the graph."""
    if config.node_count != g.node_count:
        raise ValueError("configuration size does not match the graph")
    if g.edge_count == 0:
        return FundamentalAssignment(np.empty((0, 3, 3)))
    cams = config.cameras
    ei = np.array([e[0] for e in g.edges])
    ej = np.array([e[1] for e in g.edges])
    F = _fundamental_minors(cams[ei], cams[ej])
    norms = np.linalg.norm(F, axis=(1, 2))
    scales = np.linalg.norm(cams[ei], axis=(1, 2)) * np.linalg.norm(cams[ej], axis=(1, 2))
    bad = np.nonzero(norms <= COINCIDENT_CENTERS_REL_TOL * scales)[0]
    if bad.size:
        raise CoincidentCentersError(
            f"coincident centers on edge {g.edges[int(bad[0])]}"
        )
    F /= norms[:, None, None]
    # sign fix: first entry above tolerance (row-major) made positive
    flat = F.reshape(len(F), 9)
    first = np.argmax(np.abs(flat) > 1e-12, axis=1)
    lead = flat[np.arange(len(F)), first]
    F[lead < 0] *= -1.0
    return FundamentalAssignment(F)


def compatibility_residual(P_i: np.ndarray, P_j: np.ndarray, F: np.ndarray) -> np.ndarray:
    """10-vector vech(S + S^T) with S = P_j^T F P_i.

    Vanishes exactly when F is proportional to the fundamental matrix of the
    pair; homogeneous of degree one in each argument.
    """
    S = np.asarray(P_j).T @ np.asarray(F) @ np.asarray(P_i)
    return vech(S + S.T, rtol=np.inf)


def random_generic_configuration(
    g: ViewingGraph, seed: int, retries: int = GENERIC_RETRIES
) -> CameraConfiguration:
    """Draw one random camera per node, redrawing until the configuration is
    generic: every camera has rank 3 and no edge pair shares a center.

    Entries are i.i.d. uniform on [-1, 1]; each camera is then rescaled to
    unit Frobenius norm so downstream Jacobians are well-scaled.  The same
    seed always yields the same configuration.
    """
    rng = np.random.default_rng(seed)
    n = g.node_count
    ei = np.array([e[0] for e in g.edges], dtype=int)
    ej = np.array([e[1] for e in g.edges], dtype=int)
    for _ in range(retries):
        cams = rng.uniform(-1.0, 1.0, size=(n, 3, 4))
        cams /= np.linalg.norm(cams, axis=(1, 2))[:, None, None]
        sv = np.linalg.svd(cams, compute_uv=False)
        if np.any(sv[:, 2] <= _CAMERA_RANK_REL_TOL * sv[:, 0]):
            continue
        if g.edge_count:
            F = _fundamental_minors(cams[ei], cams[ej])
            norms = np.linalg.norm(F, axis=(1, 2))
            if np.any(norms <= COINCIDENT_CENTERS_REL_TOL):
                continue
        return CameraConfiguration(cams, int(seed))
    raise DegenerateConfigurationError(
        f"no generic configuration after {retries} draws (seed {seed})"
    )
