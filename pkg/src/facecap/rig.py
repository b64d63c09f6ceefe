"""Jaw-skinned linear blendshape rig: evaluation, de-skinning, Jacobians.

A shape is stored as a de-skinned linear delta D_i plus a per-shape jaw
transform (Euler rotation R_i, translation T_i).  Per vertex, the skinning
weight M blends between skull-fixed (M = 0) and jaw-rigid (M = 1) motion:

    S_i = (M R_i + (1 - M) I)(N + D_i) + M T_i

Evaluation composes all shapes through a shared jaw transform interpolated
in Euler-angle space, then applies the rigid head pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularBlend

BLEND_CONDITION_LIMIT = 1e8


@dataclass(frozen=True)
class PoseParams:
    """Head pitch/yaw (degrees), control vector w in [0,1]^n, screen shift."""

    pitch: float = 0.0
    yaw: float = 0.0
    w: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tx: float = 0.0
    ty: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float).reshape(-1))

    def replace(self, **kw) -> "PoseParams":
        data = {"pitch": self.pitch, "yaw": self.yaw, "w": self.w.copy(),
                "tx": self.tx, "ty": self.ty}
        data.update(kw)
        return PoseParams(**data)


@dataclass(frozen=True)
class BlendshapeRig:
    neutral: np.ndarray            # (V, 3)
    deltas: np.ndarray             # (n_shapes, V, 3) de-skinned offsets
    skin_weights: np.ndarray       # (V,) in [0, 1]; 0 = skull only, 1 = jaw only
    jaw_rotations: np.ndarray      # (n_shapes, 3) Euler angles, degrees
    jaw_translations: np.ndarray   # (n_shapes, 3)
    jaw_control_indices: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "neutral", np.asarray(self.neutral, dtype=float))
        object.__setattr__(self, "deltas", np.asarray(self.deltas, dtype=float))
        object.__setattr__(self, "skin_weights",
                           np.asarray(self.skin_weights, dtype=float).reshape(-1))
        object.__setattr__(self, "jaw_rotations",
                           np.asarray(self.jaw_rotations, dtype=float))
        object.__setattr__(self, "jaw_translations",
                           np.asarray(self.jaw_translations, dtype=float))
        object.__setattr__(self, "jaw_control_indices",
                           tuple(int(i) for i in self.jaw_control_indices))
        v = self.neutral.shape[0]
        n = self.deltas.shape[0]
        if self.deltas.shape[1:] != (v, 3):
            raise ValueError("deltas must be (n_shapes, V, 3)")
        if self.skin_weights.shape != (v,):
            raise ValueError("skin_weights must be (V,)")
        if self.jaw_rotations.shape != (n, 3) or self.jaw_translations.shape != (n, 3):
            raise ValueError("per-shape jaw transforms must be (n_shapes, 3)")
        if np.any(self.skin_weights < 0) or np.any(self.skin_weights > 1):
            raise ValueError("skin weights must lie in [0, 1]")
        non_jaw = [i for i in range(n) if i not in self.jaw_control_indices]
        if non_jaw and (np.any(self.jaw_rotations[non_jaw] != 0)
                        or np.any(self.jaw_translations[non_jaw] != 0)):
            raise ValueError("non-jaw shapes must have zero jaw transforms")

    @property
    def n_shapes(self) -> int:
        return self.deltas.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.neutral.shape[0]

    @property
    def centroid(self) -> np.ndarray:
        """Rigid-pose pivot: centroid of the neutral mesh."""
        return self.neutral.mean(axis=0)


def euler_to_matrix(angles_deg: np.ndarray) -> np.ndarray:
    """Intrinsic XYZ rotation: R = Rx(ax) @ Ry(ay) @ Rz(az), degrees."""
    ax, ay, az = (math.radians(float(a)) for a in angles_deg)
    cx, sx = math.cos(ax), math.sin(ax)
    cy, sy = math.cos(ay), math.sin(ay)
    cz, sz = math.cos(az), math.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rx @ ry @ rz


def _euler_matrix_derivatives(angles_deg: np.ndarray):
    """d(euler_to_matrix)/d(angle_k) for k in x, y, z, in per-degree units."""
    ax, ay, az = (math.radians(float(a)) for a in angles_deg)
    cx, sx = math.cos(ax), math.sin(ax)
    cy, sy = math.cos(ay), math.sin(ay)
    cz, sz = math.cos(az), math.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    drx = np.array([[0, 0, 0], [0, -sx, -cx], [0, cx, -sx]])
    dry = np.array([[-sy, 0, cy], [0, 0, 0], [-cy, 0, -sy]])
    drz = np.array([[-sz, -cz, 0], [cz, -sz, 0], [0, 0, 0]])
    scale = math.pi / 180.0
    return (scale * drx @ ry @ rz,
            scale * rx @ dry @ rz,
            scale * rx @ ry @ drz)


def jaw_angles(rig: BlendshapeRig, w: np.ndarray) -> np.ndarray:
    """Interpolated jaw Euler angles: sum of w_i * angles_i over jaw shapes."""
    if not rig.jaw_control_indices:
        return np.zeros(3)
    idx = list(rig.jaw_control_indices)
    return w[idx] @ rig.jaw_rotations[idx]


def jaw_transform(rig: BlendshapeRig, w: np.ndarray):
    """Blended jaw rotation matrix and translation for a control vector."""
    R = euler_to_matrix(jaw_angles(rig, w))
    T = w @ rig.jaw_translations
    return R, T


_EYE3 = np.eye(3)


def _blend_apply(M: np.ndarray, R: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """(M R + (1 - M) I) per vertex, applied to pts; M is (V,), pts (V, 3)."""
    if np.array_equal(R, _EYE3):
        # blend of two identities is the identity; keeps the neutral bit-exact
        return pts
    return M[:, None] * (pts @ R.T) + (1.0 - M[:, None]) * pts


def evaluate(rig: BlendshapeRig, params: PoseParams) -> np.ndarray:
    """Posed vertices: rigid head pose applied to the skinned blendshape sum."""
    w = params.w
    assert w.shape == (rig.n_shapes,), "control vector length mismatch"
    base = rig.neutral + np.tensordot(w, rig.deltas, axes=1)
    R, T = jaw_transform(rig, w)
    M = rig.skin_weights
    verts = _blend_apply(M, R, base) + M[:, None] * T
    return _apply_rigid(verts, rig.centroid, params)


def _apply_rigid(verts: np.ndarray, pivot: np.ndarray, params: PoseParams) -> np.ndarray:
    from .geom import rotation_pitch_yaw
    if params.pitch == 0.0 and params.yaw == 0.0:
        out = verts
    else:
        R = rotation_pitch_yaw(params.pitch, params.yaw)
        out = (verts - pivot) @ R.T + pivot
    if params.tx or params.ty:
        out = out + np.array([params.tx, params.ty, 0.0])
    return out


def deskin_shape(shape: np.ndarray, neutral: np.ndarray, skin_weights: np.ndarray,
                 rotation_deg: np.ndarray, translation: np.ndarray) -> np.ndarray:
    """Recover the de-skinned delta D from a sculpted shape S.

    Solves S = (M R + (1 - M) I)(N + D) + M T per vertex by inverting the
    3x3 blend matrix.  Raises SingularBlend if any per-vertex blend matrix
    has condition number above 1e8 (cannot occur for proper rotations with
    M in [0, 1], but guards degenerate inputs).
    """
    shape = np.asarray(shape, dtype=float)
    neutral = np.asarray(neutral, dtype=float)
    M = np.asarray(skin_weights, dtype=float).reshape(-1)
    R = euler_to_matrix(rotation_deg)
    T = np.asarray(translation, dtype=float).reshape(3)

    blend = M[:, None, None] * R[None] + (1.0 - M)[:, None, None] * np.eye(3)[None]
    cond = np.linalg.cond(blend)
    if np.any(cond > BLEND_CONDITION_LIMIT):
        raise SingularBlend(f"blend matrix condition {cond.max():.3g} too large")
    rhs = shape - M[:, None] * T
    restored = np.linalg.solve(blend, rhs[:, :, None])[:, :, 0]
    return restored - neutral


def forward_shape(delta: np.ndarray, neutral: np.ndarray, skin_weights: np.ndarray,
                  rotation_deg: np.ndarray, translation: np.ndarray) -> np.ndarray:
    """Sculpted shape S from a de-skinned delta (inverse of deskin_shape)."""
    M = np.asarray(skin_weights, dtype=float).reshape(-1)
    R = euler_to_matrix(rotation_deg)
    T = np.asarray(translation, dtype=float).reshape(3)
    return _blend_apply(M, R, neutral + delta) + M[:, None] * T


def jacobian_w(rig: BlendshapeRig, params: PoseParams,
               vertex_subset: np.ndarray | None = None) -> np.ndarray:
    """Analytic d(posed vertices)/d(w): (V_sub, 3, n_shapes).

    Non-jaw columns are (M R(w) + (1 - M) I) D_i.  Jaw columns additionally
    carry the rotation-interpolation term M (dR/dw_i)(N + sum w D) and the
    translation term M T_i.  Everything is rotated by the rigid head pose.
    """
    from .geom import rotation_pitch_yaw

    w = params.w
    sub = np.arange(rig.n_vertices) if vertex_subset is None else np.asarray(vertex_subset)
    M = rig.skin_weights[sub]
    base = (rig.neutral + np.tensordot(w, rig.deltas, axes=1))[sub]
    angles = jaw_angles(rig, w)
    R = euler_to_matrix(angles)
    dR = _euler_matrix_derivatives(angles)

    n = rig.n_shapes
    jac = np.empty((len(sub), 3, n))
    for i in range(n):
        col = _blend_apply(M, R, rig.deltas[i][sub])
        if i in rig.jaw_control_indices:
            dR_dwi = sum(rig.jaw_rotations[i, k] * dR[k] for k in range(3))
            col = col + M[:, None] * (base @ dR_dwi.T) + M[:, None] * rig.jaw_translations[i]
        jac[:, :, i] = col
    R_rigid = rotation_pitch_yaw(params.pitch, params.yaw)
    return np.einsum("ab,vbn->van", R_rigid, jac)


def jacobian_pose(rig: BlendshapeRig, params: PoseParams,
                  vertex_subset: np.ndarray | None = None) -> np.ndarray:
    """Analytic d(posed vertices)/d(pitch, yaw): (V_sub, 3, 2), per degree."""
    sub = np.arange(rig.n_vertices) if vertex_subset is None else np.asarray(vertex_subset)
    w = params.w
    base = rig.neutral + np.tensordot(w, rig.deltas, axes=1)
    R, T = jaw_transform(rig, w)
    verts = (_blend_apply(rig.skin_weights, R, base)
             + rig.skin_weights[:, None] * T)[sub] - rig.centroid

    p = math.radians(params.pitch)
    y = math.radians(params.yaw)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    drx = np.array([[0, 0, 0], [0, -sp, -cp], [0, cp, -sp]])
    dry = np.array([[-sy, 0, cy], [0, 0, 0], [-cy, 0, -sy]])
    scale = math.pi / 180.0
    d_pitch = verts @ (scale * drx @ ry).T
    d_yaw = verts @ (scale * rx @ dry).T
    return np.stack([d_pitch, d_yaw], axis=2)
