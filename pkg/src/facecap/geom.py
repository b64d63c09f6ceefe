"""Rigid point-set alignment and pitch/yaw pose fitting from facial landmarks.

Pose is recovered by rigidly normalizing a 13-landmark rigid subset and
fitting the two rotation angles of a 3D template whose orthographic
projection best explains the normalized landmarks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput

# Rigid subset of the 68-landmark convention: jaw endpoints (temples),
# nose bridge + tip + wings, and the four eye corners.  These move little
# with expression.  Overridable via PoseFitConfig.
RIGID_LANDMARK_INDICES = (0, 16, 27, 28, 29, 30, 31, 33, 35, 36, 39, 42, 45)


@dataclass(frozen=True)
class LandmarkSet:
    """68 ordered 2D facial landmarks, normalized image coordinates in [0,1]."""

    points: np.ndarray  # (68, 2) float
    source_id: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.shape != (68, 2):
            raise ValueError(f"expected (68, 2) landmarks, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("landmarks must be finite")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class Similarity2D:
    """2D similarity transform p -> scale * R(rotation) @ p + translation."""

    scale: float
    rotation: float  # radians
    translation: np.ndarray  # (2,)

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "translation",
                           np.asarray(self.translation, dtype=float).reshape(2))

    @property
    def matrix(self) -> np.ndarray:
        """Linear part, scale * R, as a (2, 2) array."""
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return self.scale * np.array([[c, -s], [s, c]])

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points @ self.matrix.T + self.translation

    def compose(self, other: "Similarity2D") -> "Similarity2D":
        """Transform equivalent to applying `other` first, then `self`."""
        return Similarity2D(
            scale=self.scale * other.scale,
            rotation=_wrap_angle(self.rotation + other.rotation),
            translation=self.matrix @ other.translation + self.translation,
        )

    def inverse(self) -> "Similarity2D":
        inv_lin = np.linalg.inv(self.matrix)
        return Similarity2D(
            scale=1.0 / self.scale,
            rotation=_wrap_angle(-self.rotation),
            translation=-inv_lin @ self.translation,
        )


def _wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def rigid_align(src: np.ndarray, dst: np.ndarray, allow_scale: bool = True) -> Similarity2D:
    """Least-squares similarity transform mapping src onto dst (Umeyama).

    Minimizes sum ||T(src_k) - dst_k||^2 over rotation, translation and
    (optionally) uniform scale.  Reflections are excluded: the rotation
    always has determinant +1.

    Raises DegenerateInput when the source points all coincide.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    assert src.shape == dst.shape and src.ndim == 2 and src.shape[1] == 2
    assert src.shape[0] >= 2, "need at least two point pairs"

    n = src.shape[0]
    mu_src = src.mean(axis=0)
    mu_dst = dst.mean(axis=0)
    src_c = src - mu_src
    dst_c = dst - mu_dst

    var_src = (src_c ** 2).sum() / n
    if var_src < 1e-24:
        raise DegenerateInput("all source points coincide")

    sigma = dst_c.T @ src_c / n
    U, d, Vt = np.linalg.svd(sigma)
    s = np.ones(2)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        s[-1] = -1.0
    R = U @ np.diag(s) @ Vt

    scale = float((d * s).sum() / var_src) if allow_scale else 1.0
    if scale <= 0:
        # Degenerate covariance (e.g. dst collapsed to a point); fall back
        # to pure rotation + translation so the transform stays valid.
        scale = 1.0
    t = mu_dst - scale * R @ mu_src
    return Similarity2D(scale=scale, rotation=math.atan2(R[1, 0], R[0, 0]), translation=t)


def alignment_residual(src: np.ndarray, dst: np.ndarray, allow_scale: bool = True) -> float:
    """Mean per-point distance after optimal similarity alignment of src to dst."""
    T = rigid_align(src, dst, allow_scale=allow_scale)
    return float(np.linalg.norm(T.apply(src) - dst, axis=1).mean())


# ---------------------------------------------------------------------------
# Pitch/yaw fitting against a 3D template
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TemplateModel:
    """Canonical head vertices with marker indices for the rigid landmark subset.

    The model is framed so pitch = yaw = 0 faces the camera (x right, y up,
    z toward the viewer).
    """

    vertices: np.ndarray       # (V, 3)
    marker_indices: np.ndarray  # (13,) indices into vertices, ordered as L_r

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "marker_indices",
                           np.asarray(self.marker_indices, dtype=int).reshape(-1))

    @property
    def markers(self) -> np.ndarray:
        return self.vertices[self.marker_indices]


@dataclass(frozen=True)
class PoseFitConfig:
    rigid_landmark_indices: tuple = RIGID_LANDMARK_INDICES
    pitch_range: tuple = (-40.0, 40.0)
    yaw_range: tuple = (-90.0, 90.0)
    grid_step: float = 5.0
    max_iter: int = 50
    step_tol: float = 1e-6  # degrees
    allow_scale: bool = True


@dataclass(frozen=True)
class PoseFit:
    pitch: float
    yaw: float
    residual: float  # mean marker distance after alignment
    converged: bool


def rotation_pitch_yaw(pitch_deg: float, yaw_deg: float) -> np.ndarray:
    """Head rotation: yaw about +y, then pitch about +x, as a (3, 3) matrix."""
    p = math.radians(pitch_deg)
    y = math.radians(yaw_deg)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    return rx @ ry


def project_orthographic(points3d: np.ndarray, pitch_deg: float = 0.0,
                         yaw_deg: float = 0.0) -> np.ndarray:
    """Rotate points by (pitch, yaw) and project to image coords (y down)."""
    rotated = np.asarray(points3d, dtype=float) @ rotation_pitch_yaw(pitch_deg, yaw_deg).T
    return rotated[:, :2] * np.array([1.0, -1.0])


def _batched_alignment_sse(src: np.ndarray, dst_batch: np.ndarray,
                           allow_scale: bool) -> np.ndarray:
    """Sum-of-squares residual of aligning src onto each dst in a batch.

    src: (N, 2), dst_batch: (B, N, 2).  Vectorized Umeyama over the batch.
    """
    n = src.shape[0]
    mu_src = src.mean(axis=0)
    src_c = src - mu_src
    var_src = (src_c ** 2).sum() / n

    mu_dst = dst_batch.mean(axis=1)                       # (B, 2)
    dst_c = dst_batch - mu_dst[:, None, :]                # (B, N, 2)
    sigma = dst_c.transpose(0, 2, 1) @ src_c[None] / n    # (B, 2, 2)

    U, d, Vt = np.linalg.svd(sigma)
    det = np.linalg.det(U) * np.linalg.det(Vt)            # (B,)
    s = np.ones_like(d)
    s[det < 0, -1] = -1.0
    R = (U * s[:, None, :]) @ Vt                          # (B, 2, 2)

    if allow_scale:
        scale = (d * s).sum(axis=1) / var_src             # (B,)
        scale = np.where(scale > 0, scale, 1.0)
    else:
        scale = np.ones(len(dst_batch))

    aligned = scale[:, None, None] * (src_c @ R.transpose(0, 2, 1))
    diff = aligned + mu_dst[:, None, :] - dst_batch
    return (diff ** 2).sum(axis=(1, 2))


def fit_pitch_yaw(landmarks: LandmarkSet, template: TemplateModel,
                  config: PoseFitConfig | None = None) -> PoseFit:
    """Recover head pitch and yaw (degrees) from the rigid landmark subset.

    Coarse grid search over the configured pitch/yaw ranges, followed by
    Gauss-Newton refinement.  At each candidate pose the rigid landmarks are
    re-aligned to the template's orthographic projection with an optimal
    similarity transform, so the objective is invariant to landmark scale,
    in-plane rotation and translation.
    """
    config = config or PoseFitConfig()
    idx = list(config.rigid_landmark_indices)
    lr = landmarks.points[idx]
    markers = template.markers
    if len(idx) != len(markers):
        raise ValueError("rigid landmark count does not match template markers")

    def residual_vector(p: float, y: float) -> np.ndarray:
        proj = project_orthographic(markers, p, y)
        T = rigid_align(lr, proj, allow_scale=config.allow_scale)
        return (T.apply(lr) - proj).ravel()

    # Coarse grid, evaluated in one batch.
    pitches = np.arange(config.pitch_range[0], config.pitch_range[1] + 1e-9,
                        config.grid_step)
    yaws = np.arange(config.yaw_range[0], config.yaw_range[1] + 1e-9,
                     config.grid_step)
    pg, yg = np.meshgrid(pitches, yaws, indexing="ij")
    pg, yg = pg.ravel(), yg.ravel()

    rots = np.stack([rotation_pitch_yaw(p, y) for p, y in zip(pg, yg)])
    proj = np.einsum("bij,nj->bni", rots, markers)[:, :, :2]
    proj[:, :, 1] *= -1.0
    sse = _batched_alignment_sse(lr, proj, config.allow_scale)
    best = int(np.argmin(sse))
    p, y = float(pg[best]), float(yg[best])

    # Gauss-Newton on the 2-parameter residual; Jacobian by central differences
    # (the inner alignment is re-solved at each probe).
    h = 0.25
    converged = False
    best_p, best_y = p, y
    best_sse = float(sse[best])
    for _ in range(config.max_iter):
        r = residual_vector(p, y)
        jp = (residual_vector(p + h, y) - residual_vector(p - h, y)) / (2 * h)
        jy = (residual_vector(p, y + h) - residual_vector(p, y - h)) / (2 * h)
        J = np.stack([jp, jy], axis=1)
        JtJ = J.T @ J + 1e-12 * np.eye(2)
        try:
            step = np.linalg.solve(JtJ, -J.T @ r)
        except np.linalg.LinAlgError:
            break
        p += float(step[0])
        y += float(step[1])
        cur = float((residual_vector(p, y) ** 2).sum())
        if cur < best_sse:
            best_sse, best_p, best_y = cur, p, y
        if np.abs(step).max() < config.step_tol:
            converged = True
            break

    res = float(np.linalg.norm(
        residual_vector(best_p, best_y).reshape(-1, 2), axis=1).mean())
    return PoseFit(pitch=best_p, yaw=best_y, residual=res, converged=converged)
