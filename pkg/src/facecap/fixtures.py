"""Procedural test assets: a rigged head model with embedded landmarks,
region/color textures, and a synthetic footage generator.

The head is a displaced ellipsoid with a latitude/longitude UV atlas.
Facial detail lives in "face coordinates" (uf, vf): uf scales azimuth
(+-60 deg at uf = +-1), vf scales elevation (+-50 deg at vf = +-1), with
the face centered on +z.  Landmarks, blendshape bumps, and texture regions
are all authored in that shared frame so they stay mutually aligned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geom import RIGID_LANDMARK_INDICES, LandmarkSet, TemplateModel
from .render import Camera, Mesh, SegTexture
from .rig import BlendshapeRig, PoseParams, euler_to_matrix, evaluate

AZIMUTH_SCALE = math.radians(60.0)    # radians per unit uf
ELEVATION_SCALE = math.radians(50.0)  # radians per unit vf
HEAD_RADII = (0.78, 1.0, 0.82)

EXPRESSION_SHAPES = (
    "brow_raise_left", "brow_raise_right", "blink_left", "blink_right",
    "smile_left", "smile_right", "lip_pucker", "upper_lip_raise",
)
JAW_SHAPES = ("jaw_open", "jaw_side")

REGION_NAMES = {
    1: "skin", 2: "scalp", 3: "neck", 4: "forehead", 5: "brow_left",
    6: "brow_right", 7: "eye_left", 8: "eye_right", 9: "nose",
    10: "lips", 11: "chin", 12: "grid_a", 13: "grid_b", 14: "grid_c",
    15: "grid_d", 16: "brow_left_b", 17: "brow_left_c",
    18: "brow_right_b", 19: "brow_right_c", 20: "eye_left_b",
    21: "eye_left_c", 22: "eye_right_b", 23: "eye_right_c",
    24: "nose_b", 25: "nose_c", 26: "lips_b", 27: "lips_c",
}

REGION_COLORS = np.array([
    [0.00, 0.00, 0.00],   # 0 background
    [0.85, 0.65, 0.55],   # 1 skin
    [0.25, 0.15, 0.10],   # 2 scalp
    [0.72, 0.52, 0.44],   # 3 neck
    [0.95, 0.78, 0.62],   # 4 forehead
    [0.32, 0.20, 0.12],   # 5 brow_left
    [0.40, 0.26, 0.16],   # 6 brow_right
    [0.92, 0.94, 0.96],   # 7 eye_left
    [0.80, 0.86, 0.94],   # 8 eye_right
    [0.80, 0.55, 0.45],   # 9 nose
    [0.72, 0.30, 0.32],   # 10 lips
    [0.90, 0.70, 0.55],   # 11 chin
    [0.93, 0.78, 0.60],   # 12 grid_a
    [0.58, 0.40, 0.30],   # 13 grid_b
    [0.82, 0.52, 0.38],   # 14 grid_c
    [0.70, 0.62, 0.52],   # 15 grid_d
    [0.55, 0.42, 0.30],   # 16 brow_left_b
    [0.22, 0.15, 0.10],   # 17 brow_left_c
    [0.50, 0.38, 0.26],   # 18 brow_right_b
    [0.26, 0.18, 0.12],   # 19 brow_right_c
    [0.15, 0.18, 0.35],   # 20 eye_left_b
    [0.92, 0.92, 0.95],   # 21 eye_left_c
    [0.20, 0.30, 0.15],   # 22 eye_right_b
    [0.95, 0.90, 0.85],   # 23 eye_right_c
    [0.70, 0.48, 0.36],   # 24 nose_b
    [0.95, 0.75, 0.60],   # 25 nose_c
    [0.55, 0.20, 0.25],   # 26 lips_b
    [0.90, 0.55, 0.50],   # 27 lips_c
])

# side of one calibration-grid cell in face coordinates; ~6 px at a 64 px
# frontal framing, small enough that every control motion crosses edges
GRID_CELL = 0.34


@dataclass(frozen=True)
class FixtureHead:
    mesh: Mesh
    rig: BlendshapeRig
    control_names: tuple
    landmark_tris: np.ndarray    # (68,) triangle id per landmark
    landmark_barys: np.ndarray   # (68, 3) barycentric attachment
    template: TemplateModel
    seg: SegTexture
    texture: np.ndarray          # (Ht, Wt, 3) smooth RGB

    @property
    def n_controls(self) -> int:
        return self.rig.n_shapes


# ---------------------------------------------------------------------------
# Surface geometry
# ---------------------------------------------------------------------------

def _face_coords(theta, phi):
    """Colatitude/azimuth -> face coordinates (uf, vf)."""
    uf = phi / AZIMUTH_SCALE
    vf = (math.pi / 2.0 - theta) / ELEVATION_SCALE
    return uf, vf


def _surface_point(theta, phi):
    """Head surface position for colatitude theta, azimuth phi (front +z)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, ct = np.sin(theta), np.cos(theta)
    d = np.stack([st * np.sin(phi), ct, st * np.cos(phi)], axis=-1)
    rx, ry, rz = HEAD_RADII
    p = d * np.array([rx, ry, rz])
    uf, vf = _face_coords(theta, phi)
    nose = 0.30 * np.exp(-((uf / 0.22) ** 2) - (((vf - 0.05) / 0.34) ** 2))
    chin = 0.08 * np.exp(-((uf / 0.35) ** 2) - (((vf + 1.00) / 0.30) ** 2))
    return p + (nose + chin)[..., None] * d


def _grid_angles(n_lat, n_lon):
    theta = np.pi * np.arange(n_lat + 1) / n_lat
    phi = 2.0 * np.pi * (np.arange(n_lon + 1) / n_lon - 0.5)
    return theta, phi


def _head_mesh(n_lat: int, n_lon: int) -> Mesh:
    theta, phi = _grid_angles(n_lat, n_lon)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    verts = _surface_point(tt, pp).reshape(-1, 3)
    uu = np.arange(n_lon + 1) / n_lon
    vv = np.arange(n_lat + 1) / n_lat
    uvs = np.stack(np.meshgrid(vv, uu, indexing="ij"), axis=-1)[..., ::-1].reshape(-1, 2)
    tris = []
    stride = n_lon + 1
    for i in range(n_lat):
        for j in range(n_lon):
            a = i * stride + j
            b = a + 1
            c = a + stride
            d = c + 1
            if i > 0:
                tris.append((a, c, b))
            if i < n_lat - 1:
                tris.append((b, c, d))
    return Mesh(verts, np.array(tris, dtype=np.int64), uvs)


def _cell_triangle_lookup(n_lat, n_lon, tris):
    return {tuple(sorted(t)): idx for idx, t in enumerate(map(tuple, tris))}


# ---------------------------------------------------------------------------
# Landmark layout (68 points in face coordinates)
# ---------------------------------------------------------------------------

def _eye_points(cx, cy, rx=0.15, ry=0.07):
    ang = np.radians([180, 120, 60, 0, -60, -120])
    return np.stack([cx + rx * np.cos(ang), cy + ry * np.sin(ang)], axis=1)


def face_landmark_layout() -> np.ndarray:
    """(68, 2) canonical landmark positions in face coordinates."""
    pts = np.zeros((68, 2))
    t = np.arange(17) / 16.0
    pts[0:17, 0] = -np.cos(np.pi * t)
    pts[0:17, 1] = 0.10 - 1.15 * np.sin(np.pi * t)
    arch = 0.08 * np.sin(np.pi * np.arange(5) / 4.0)
    pts[17:22, 0] = np.linspace(-0.62, -0.18, 5)
    pts[17:22, 1] = 0.52 + arch
    pts[22:27, 0] = np.linspace(0.18, 0.62, 5)
    pts[22:27, 1] = 0.52 + arch[::-1]
    pts[27:31, 0] = 0.0
    pts[27:31, 1] = np.linspace(0.42, 0.08, 4)
    pts[31:36, 0] = np.array([-0.16, -0.08, 0.0, 0.08, 0.16])
    pts[31:36, 1] = np.array([-0.08, -0.11, -0.13, -0.11, -0.08])
    pts[36:42] = _eye_points(-0.40, 0.32)
    pts[42:48] = _eye_points(0.40, 0.32)
    ang_out = np.radians([180, 150, 120, 90, 60, 30, 0, -30, -60, -90, -120, -150])
    pts[48:60, 0] = 0.30 * np.cos(ang_out)
    pts[48:60, 1] = -0.55 + 0.15 * np.sin(ang_out)
    ang_in = np.radians([180, 135, 90, 45, 0, -45, -90, -135])
    pts[60:68, 0] = 0.18 * np.cos(ang_in)
    pts[60:68, 1] = -0.55 + 0.07 * np.sin(ang_in)
    return pts


def _layout_to_angles(layout):
    phi = layout[:, 0] * AZIMUTH_SCALE
    theta = math.pi / 2.0 - layout[:, 1] * ELEVATION_SCALE
    return np.stack([theta, phi], axis=1)


# ---------------------------------------------------------------------------
# Blendshapes
# ---------------------------------------------------------------------------

def _bump(uf, vf, center, widths, direction, amplitude, directions=None):
    g = np.exp(-(((uf - center[0]) / widths[0]) ** 2)
               - (((vf - center[1]) / widths[1]) ** 2))
    if direction is None:
        return amplitude * g[:, None] * directions
    d = np.asarray(direction, dtype=float)
    return amplitude * g[:, None] * (d / np.linalg.norm(d))


def _expression_deltas(verts):
    x, y, z = verts.T
    phi = np.arctan2(x, z)
    theta = np.arccos(np.clip(y / np.linalg.norm(verts, axis=1), -1, 1))
    uf, vf = _face_coords(theta, phi)
    radial = verts / np.linalg.norm(verts, axis=1, keepdims=True)

    # the pucker contracts the mouth region toward its center (plus a push
    # forward); the contraction is mostly sideways so it stays visible
    # head-on and independent of the vertical lip raise
    mouth_center = _surface_point(math.pi / 2.0 + 0.55 * ELEVATION_SCALE, 0.0)
    to_center = (mouth_center - verts) * np.array([1.0, 0.15, 0.0])
    norms = np.linalg.norm(to_center, axis=1, keepdims=True)
    pucker_dirs = to_center / np.maximum(norms, 1e-9) + np.array([0.0, 0.0, 0.55])
    pucker_dirs /= np.linalg.norm(pucker_dirs, axis=1, keepdims=True)

    # amplitudes sized so every control moves region boundaries by multiple
    # pixels in a 64x64 render; weaker shapes are unidentifiable to the
    # solver.  Bump footprints are kept tight so no two controls push the
    # same vertices in opposite directions.
    shapes = {
        "brow_raise_left": _bump(uf, vf, (-0.34, 0.58), (0.26, 0.13), (0, 1, 0.15), 0.14),
        "brow_raise_right": _bump(uf, vf, (0.34, 0.58), (0.26, 0.13), (0, 1, 0.15), 0.14),
        "blink_left": _bump(uf, vf, (-0.34, 0.36), (0.22, 0.08), (0, -1, 0.25), 0.15),
        "blink_right": _bump(uf, vf, (0.34, 0.36), (0.22, 0.08), (0, -1, 0.25), 0.15),
        "smile_left": _bump(uf, vf, (-0.29, -0.52), (0.22, 0.18), (-0.55, 0.60, 0.10), 0.18),
        "smile_right": _bump(uf, vf, (0.29, -0.52), (0.22, 0.18), (0.55, 0.60, 0.10), 0.18),
        "lip_pucker": _bump(uf, vf, (0.0, -0.55), (0.30, 0.22), None, 0.16,
                            directions=pucker_dirs),
        "upper_lip_raise": _bump(uf, vf, (0.0, -0.44), (0.24, 0.10), (0, 1, 0.1), 0.12),
    }
    return shapes


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _jaw_skin_weights(verts):
    y, z = verts[:, 1], verts[:, 2]
    lowness = _smoothstep((-0.34 - y) / 0.25)
    frontness = _smoothstep((z + 0.05) / 0.30)
    return lowness * frontness


JAW_PIVOT = np.array([0.0, -0.05, -0.12])


def _jaw_transforms():
    rotations = {"jaw_open": np.array([16.0, 0.0, 0.0]),
                 "jaw_side": np.array([0.0, 7.0, 0.0])}
    out = {}
    for name, rot in rotations.items():
        r = euler_to_matrix(rot)
        out[name] = (rot, JAW_PIVOT - r @ JAW_PIVOT)
    return out


# ---------------------------------------------------------------------------
# Textures
# ---------------------------------------------------------------------------

def _texel_face_coords(size):
    v = (np.arange(size) + 0.5) / size
    u = (np.arange(size) + 0.5) / size
    theta = np.pi * v
    phi = 2.0 * np.pi * (u - 0.5)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    uf, vf = _face_coords(tt, pp)
    lam = np.pi / 2.0 - tt
    return uf, vf, lam, pp


def _in_ellipse(uf, vf, center, rx, ry):
    return ((uf - center[0]) / rx) ** 2 + ((vf - center[1]) / ry) ** 2 <= 1.0


def make_seg_texture(size: int = 96) -> SegTexture:
    """Label texture: a calibration checker grid under semantic features.

    The grid's edges ride the surface, so any control motion flips pixels
    at many edges in both image directions; large uniform regions would
    leave the solve's pixel loss flat under sub-cell deformations.

    The semantic patches are themselves sub-checkered at half a grid cell
    with a three-phase color cycle.  Two-phase patterns alias under
    one-cell diagonal shifts of the surface; three phases make the pattern
    aperiodic over the reachable deformation range, so every patch pins
    absolute position as well as fine edges."""
    uf, vf, lam, phi = _texel_face_coords(size)
    iu = np.floor((uf + 8.0) / GRID_CELL).astype(np.int32)
    iv = np.floor((vf + 8.0) / GRID_CELL).astype(np.int32)
    labels = 12 + (iu & 1) + 2 * (iv & 1)
    labels[(np.abs(phi) > math.radians(95)) | (lam > math.radians(62))] = 2
    labels[lam < math.radians(-60)] = 3
    patch_cell = GRID_CELL / 2
    ju = np.floor((uf + 8.0) / patch_cell).astype(np.int32)
    jv = np.floor((vf + 8.0) / patch_cell).astype(np.int32)
    cyc = (ju + 2 * jv) % 3

    def put(mask, base, alt1, alt2):
        labels[mask & (cyc == 0)] = base
        labels[mask & (cyc == 1)] = alt1
        labels[mask & (cyc == 2)] = alt2

    put(_in_ellipse(uf, vf, (-0.34, 0.58), 0.24, 0.11), 5, 16, 17)
    put(_in_ellipse(uf, vf, (0.34, 0.58), 0.24, 0.11), 6, 18, 19)
    put(_in_ellipse(uf, vf, (-0.32, 0.32), 0.26, 0.14), 7, 20, 21)
    put(_in_ellipse(uf, vf, (0.32, 0.32), 0.26, 0.14), 8, 22, 23)
    nose = (np.abs(uf) < 0.16) & (vf > -0.14) & (vf < 0.44)
    put(nose | _in_ellipse(uf, vf, (0.0, -0.10), 0.20, 0.10), 9, 24, 25)
    put(_in_ellipse(uf, vf, (0.0, -0.55), 0.32, 0.17), 10, 26, 27)
    return SegTexture(labels, REGION_COLORS.copy())


def _soft_blob(uf, vf, center, widths, color, amplitude):
    g = np.exp(-(((uf - center[0]) / widths[0]) ** 2)
               - (((vf - center[1]) / widths[1]) ** 2))
    return amplitude * g[..., None] * np.asarray(color, dtype=float)


def make_rgb_texture(size: int = 128) -> np.ndarray:
    """Smooth, left/right-asymmetric skin-like texture."""
    uf, vf, lam, phi = _texel_face_coords(size)
    tex = np.empty((size, size, 3))
    tex[..., 0] = 0.78
    tex[..., 1] = 0.60
    tex[..., 2] = 0.50
    # large-scale gradients keep every texel distinguishable
    tex += 0.06 * np.sin(phi)[..., None] * np.array([1.0, 0.4, 0.2])
    tex += 0.05 * (vf[..., None] / 2.0) * np.array([0.5, 0.8, 1.0])
    tex += _soft_blob(uf, vf, (-0.40, 0.57), (0.30, 0.14), (-1.0, -0.9, -0.8), 0.45)
    tex += _soft_blob(uf, vf, (0.40, 0.57), (0.30, 0.14), (-1.0, -0.9, -0.8), 0.45)
    tex += _soft_blob(uf, vf, (-0.40, 0.32), (0.20, 0.12), (-0.9, -0.7, -0.4), 0.55)
    tex += _soft_blob(uf, vf, (0.40, 0.32), (0.20, 0.12), (-0.9, -0.7, -0.4), 0.55)
    tex += _soft_blob(uf, vf, (0.0, -0.55), (0.34, 0.20), (0.1, -0.45, -0.35), 0.55)
    tex += _soft_blob(uf, vf, (-0.60, -0.25), (0.30, 0.30), (0.18, -0.05, -0.02), 0.8)
    tex += _soft_blob(uf, vf, (0.55, -0.05), (0.16, 0.16), (-0.25, -0.15, 0.10), 0.8)
    tex += _soft_blob(uf, vf, (0.0, 0.10), (0.24, 0.36), (0.10, 0.06, 0.04), 0.6)
    hair = _smoothstep((np.abs(phi) - math.radians(80)) / math.radians(30)) \
        + _smoothstep((lam - math.radians(50)) / math.radians(16))
    hair = np.clip(hair, 0.0, 1.0)
    tex = tex * (1 - hair[..., None]) + hair[..., None] * np.array([0.22, 0.14, 0.10])
    return np.clip(tex, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def make_head(n_controls: int = 10, n_lat: int = 24, n_lon: int = 32,
              seg_size: int = 96, texture_size: int = 128) -> FixtureHead:
    """Build the full fixture: mesh, rig, landmarks, template, textures.

    n_controls counts total blendshape controls; the last two are always
    the jaw shapes, so 3 <= n_controls <= 10.
    """
    if not 3 <= n_controls <= 2 + len(EXPRESSION_SHAPES):
        raise ValueError("n_controls must be in [3, 10]")
    mesh = _head_mesh(n_lat, n_lon)
    verts = mesh.vertices

    expr_names = EXPRESSION_SHAPES[:n_controls - 2]
    expr = _expression_deltas(verts)
    jaw = _jaw_transforms()
    names = tuple(expr_names) + JAW_SHAPES

    n = len(names)
    deltas = np.zeros((n, len(verts), 3))
    rotations = np.zeros((n, 3))
    translations = np.zeros((n, 3))
    for i, name in enumerate(expr_names):
        deltas[i] = expr[name]
    for k, name in enumerate(JAW_SHAPES):
        rot, tr = jaw[name]
        rotations[n - 2 + k] = rot
        translations[n - 2 + k] = tr

    rig = BlendshapeRig(neutral=verts, deltas=deltas,
                        skin_weights=_jaw_skin_weights(verts),
                        jaw_rotations=rotations, jaw_translations=translations,
                        jaw_control_indices=(n - 2, n - 1))

    layout = face_landmark_layout()
    angles = _layout_to_angles(layout)
    tri_table = _cell_triangle_lookup(n_lat, n_lon, mesh.triangles)
    tri_ids, barys = [], []
    stride = n_lon + 1
    d_theta = np.pi / n_lat
    d_phi = 2.0 * np.pi / n_lon
    for theta, phi in angles:
        i = min(int(theta / d_theta), n_lat - 1)
        j = min(int((phi + np.pi) / d_phi), n_lon - 1)
        s = theta / d_theta - i
        t = (phi + np.pi) / d_phi - j
        a = i * stride + j
        b = a + 1
        c = a + stride
        d = c + 1
        if s + t <= 1.0:
            corner_ids, lam = (a, c, b), (1.0 - s - t, s, t)
        else:
            corner_ids, lam = (b, c, d), (1.0 - s, 1.0 - t, s + t - 1.0)
        tri_id = tri_table[tuple(sorted(corner_ids))]
        tri_verts = tuple(mesh.triangles[tri_id])
        bary = np.zeros(3)
        for vid, l in zip(corner_ids, lam):
            bary[tri_verts.index(vid)] = l
        tri_ids.append(tri_id)
        barys.append(bary)
    landmark_tris = np.array(tri_ids, dtype=np.int64)
    landmark_barys = np.array(barys)

    neutral_landmarks = np.einsum(
        "lk,lkd->ld", landmark_barys, verts[mesh.triangles[landmark_tris]])
    template = TemplateModel(vertices=neutral_landmarks,
                             marker_indices=RIGID_LANDMARK_INDICES)

    return FixtureHead(mesh=mesh, rig=rig, control_names=names,
                       landmark_tris=landmark_tris, landmark_barys=landmark_barys,
                       template=template, seg=make_seg_texture(seg_size),
                       texture=make_rgb_texture(texture_size))


def neutral_params(head: FixtureHead) -> PoseParams:
    return PoseParams(w=np.zeros(head.n_controls))


def landmarks3d(head: FixtureHead, params: PoseParams) -> np.ndarray:
    """Posed 3D positions of the 68 embedded landmarks."""
    verts = evaluate(head.rig, params)
    corners = verts[head.mesh.triangles[head.landmark_tris]]
    return np.einsum("lk,lkd->ld", head.landmark_barys, corners)


def project_landmarks(head: FixtureHead, params: PoseParams,
                      camera: Camera) -> LandmarkSet:
    pix, _ = camera.project(landmarks3d(head, params))
    pix = pix / np.array([camera.width, camera.height], dtype=float)
    return LandmarkSet(points=pix)


def default_camera(size: int = 128, kind: str = "pinhole") -> Camera:
    return Camera.frontal(size, size, kind=kind)


def turntable_params(head: FixtureHead, n_views: int = 20,
                     yaw_range=(-80.0, 80.0)) -> list:
    """Neutral-expression yaw sweep used for texture acquisition."""
    yaws = np.linspace(yaw_range[0], yaw_range[1], n_views)
    return [PoseParams(yaw=float(y), w=np.zeros(head.n_controls)) for y in yaws]


# ---------------------------------------------------------------------------
# Synthetic footage
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    image: np.ndarray
    landmarks: LandmarkSet
    params: PoseParams
    light_dir: tuple


def _smooth_series(rng, n, lo, hi, smooth=7):
    raw = rng.standard_normal(n + 2 * smooth)
    kernel = np.hanning(2 * smooth + 1)
    kernel /= kernel.sum()
    s = np.convolve(raw, kernel, mode="same")[smooth:smooth + n]
    if n == 1 or s.max() == s.min():
        return np.full(n, 0.5 * (lo + hi))
    return lo + (s - s.min()) / (s.max() - s.min()) * (hi - lo)


def synthesize_footage(head: FixtureHead, n_frames: int, seed: int = 0,
                       size: int = 96, kind: str = "pinhole",
                       pitch_range=(-10.0, 10.0), yaw_range=(-80.0, 80.0),
                       expression_scale: float = 0.9,
                       landmark_noise: float = 0.0,
                       render_images: bool = True,
                       shaded: bool = True) -> list:
    """Generate smoothly varying posed/lit frames of the fixture head.

    Returns Frame records with rendered image (zeros if render_images is
    False), projected landmark set, ground-truth parameters, and the light
    direction used for shading.
    """
    from .render import rasterize

    rng = np.random.default_rng(seed)
    camera = default_camera(size, kind)
    n_ctl = head.n_controls

    pitch = _smooth_series(rng, n_frames, *pitch_range)
    yaw = _smooth_series(rng, n_frames, *yaw_range)
    weights = np.stack([
        _smooth_series(rng, n_frames, 0.0, expression_scale * rng.uniform(0.4, 1.0))
        for _ in range(n_ctl)], axis=1)
    light_x = _smooth_series(rng, n_frames, -0.4, 0.4)
    light_y = _smooth_series(rng, n_frames, 0.0, 0.6)

    frames = []
    for f in range(n_frames):
        params = PoseParams(pitch=float(pitch[f]), yaw=float(yaw[f]),
                            w=weights[f].copy())
        light = (float(light_x[f]), float(light_y[f]), 1.0)
        if render_images:
            result = rasterize(head.mesh, camera, texture=head.texture,
                               rig=head.rig, params=params, shaded=shaded,
                               light_dir=light, ambient=0.35)
            image = result.image
        else:
            image = np.zeros((size, size, 3))
        pts, _ = camera.project(landmarks3d(head, params))
        pts = pts / np.array([camera.width, camera.height], dtype=float)
        if landmark_noise > 0:
            # noise in normalized screen units, same scale as the hinge delta
            pts = pts + rng.normal(0.0, landmark_noise, pts.shape)
        frames.append(Frame(image=image, landmarks=LandmarkSet(points=pts),
                            params=params, light_dir=light))
    return frames
