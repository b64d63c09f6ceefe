"""Fused hot path for supersampled segmentation renders.

The inverse solve evaluates the same render thousands of times per frame,
so the chain pose -> projection -> z-buffered raster -> box average -> loss
is compiled as a unit with no intermediate numpy temporaries.  The vertex
math mirrors rig.evaluate and Camera.project operation for operation (no
fastmath there); the raster pass follows the general path's z-buffer and
UV rules, so both routes produce the same image to the bit on a black
background.
"""

from __future__ import annotations

import numpy as np

from . import rig as rigmod
from .geom import rotation_pitch_yaw

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*a, **k):  # type: ignore
        def wrap(fn):
            return fn
        return wrap

NEAR_PLANE = 1e-3
_EYE3 = np.eye(3)


@njit(cache=True)
def _pose_project(base, skinw, jaw_rot, jaw_trans, use_jaw, head_rot,
                  use_head, pivot, tx, ty, use_shift, eye, right, up, fwd,
                  perspective, focal, scale, cx, cy):
    """Jaw skinning + rigid pose + camera projection, one pass per vertex."""
    nv = base.shape[0]
    pts = np.empty((nv, 2))
    dep = np.empty(nv)
    for i in range(nv):
        bx = base[i, 0]
        by = base[i, 1]
        bz = base[i, 2]
        m = skinw[i]
        if use_jaw:
            rx = jaw_rot[0, 0] * bx + jaw_rot[0, 1] * by + jaw_rot[0, 2] * bz
            ry = jaw_rot[1, 0] * bx + jaw_rot[1, 1] * by + jaw_rot[1, 2] * bz
            rz = jaw_rot[2, 0] * bx + jaw_rot[2, 1] * by + jaw_rot[2, 2] * bz
            vx = m * rx + (1.0 - m) * bx + m * jaw_trans[0]
            vy = m * ry + (1.0 - m) * by + m * jaw_trans[1]
            vz = m * rz + (1.0 - m) * bz + m * jaw_trans[2]
        else:
            vx = bx + m * jaw_trans[0]
            vy = by + m * jaw_trans[1]
            vz = bz + m * jaw_trans[2]
        if use_head:
            ux = vx - pivot[0]
            uy = vy - pivot[1]
            uz = vz - pivot[2]
            vx = head_rot[0, 0] * ux + head_rot[0, 1] * uy + head_rot[0, 2] * uz + pivot[0]
            vy = head_rot[1, 0] * ux + head_rot[1, 1] * uy + head_rot[1, 2] * uz + pivot[1]
            vz = head_rot[2, 0] * ux + head_rot[2, 1] * uy + head_rot[2, 2] * uz + pivot[2]
        if use_shift:
            vx = vx + tx
            vy = vy + ty
            vz = vz + 0.0
        rx = vx - eye[0]
        ry = vy - eye[1]
        rz = vz - eye[2]
        x = rx * right[0] + ry * right[1] + rz * right[2]
        y = rx * up[0] + ry * up[1] + rz * up[2]
        z = rx * fwd[0] + ry * fwd[1] + rz * fwd[2]
        if perspective:
            zs = z
            if abs(z) < NEAR_PLANE:
                zs = NEAR_PLANE
            pts[i, 0] = cx + focal * x / zs
            pts[i, 1] = cy - focal * y / zs
        else:
            pts[i, 0] = cx + scale * x
            pts[i, 1] = cy - scale * y
        dep[i] = z
    return pts, dep


@njit(cache=True, fastmath=True)
def _seg_core(pts, depth, tris, uvs, labels, colors, hs, ws, s, perspective,
              want_aux):
    """Z-buffered seg-label raster on an (hs, ws) grid, box-averaged by s.

    Returns the averaged (hs//s, ws//s, 3) image plus the supersampled
    z / triangle-id / barycentric / uv / label buffers (1x1 dummies unless
    want_aux).  Background is black; uncovered samples contribute zero.
    """
    zbuf = np.full((hs, ws), np.inf)
    tid = np.full((hs, ws), -1, np.int32)
    b0 = np.zeros((hs, ws))
    b1 = np.zeros((hs, ws))
    for t in range(tris.shape[0]):
        ia, ib, ic = tris[t, 0], tris[t, 1], tris[t, 2]
        if perspective and (depth[ia] < NEAR_PLANE or depth[ib] < NEAR_PLANE
                            or depth[ic] < NEAR_PLANE):
            continue
        ax, ay = pts[ia, 0], pts[ia, 1]
        bx, by = pts[ib, 0], pts[ib, 1]
        cx, cy = pts[ic, 0], pts[ic, 1]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0:
            continue
        inv_area = 1.0 / area
        minx = min(ax, min(bx, cx))
        maxx = max(ax, max(bx, cx))
        miny = min(ay, min(by, cy))
        maxy = max(ay, max(by, cy))
        x0 = max(int(np.ceil(minx - 0.5)), 0)
        x1 = min(int(np.floor(maxx - 0.5)), ws - 1)
        y0 = max(int(np.ceil(miny - 0.5)), 0)
        y1 = min(int(np.floor(maxy - 0.5)), hs - 1)
        for py in range(y0, y1 + 1):
            yc = py + 0.5
            for px in range(x0, x1 + 1):
                xc = px + 0.5
                w0 = ((cx - bx) * (yc - by) - (cy - by) * (xc - bx)) * inv_area
                if w0 < 0.0:
                    continue
                w1 = ((ax - cx) * (yc - cy) - (ay - cy) * (xc - cx)) * inv_area
                if w1 < 0.0:
                    continue
                w2 = 1.0 - w0 - w1
                if w2 < 0.0:
                    continue
                if perspective:
                    iz = w0 / depth[ia] + w1 / depth[ib] + w2 / depth[ic]
                    if iz < 1e-12:
                        continue
                    z = 1.0 / iz
                else:
                    z = w0 * depth[ia] + w1 * depth[ib] + w2 * depth[ic]
                if z < zbuf[py, px]:
                    zbuf[py, px] = z
                    tid[py, px] = t
                    b0[py, px] = w0
                    b1[py, px] = w1
    h = hs // s
    w = ws // s
    out = np.zeros((h, w, 3))
    th, tw = labels.shape
    if want_aux:
        uvimg = np.zeros((hs, ws, 2))
        labimg = np.zeros((hs, ws), np.int32)
    else:
        uvimg = np.zeros((1, 1, 2))
        labimg = np.zeros((1, 1), np.int32)
    for py in range(hs):
        for px in range(ws):
            t = tid[py, px]
            if t < 0:
                continue
            ia, ib, ic = tris[t, 0], tris[t, 1], tris[t, 2]
            w0 = b0[py, px]
            w1 = b1[py, px]
            w2 = 1.0 - w0 - w1
            if perspective:
                g0 = w0 / depth[ia]
                g1 = w1 / depth[ib]
                g2 = w2 / depth[ic]
                gs = g0 + g1 + g2
                g0 /= gs
                g1 /= gs
                g2 /= gs
            else:
                g0 = w0
                g1 = w1
                g2 = w2
            u = g0 * uvs[ia, 0] + g1 * uvs[ib, 0] + g2 * uvs[ic, 0]
            v = g0 * uvs[ia, 1] + g1 * uvs[ib, 1] + g2 * uvs[ic, 1]
            ti = int(v * th)
            if ti < 0:
                ti = 0
            elif ti > th - 1:
                ti = th - 1
            tj = int(u * tw)
            if tj < 0:
                tj = 0
            elif tj > tw - 1:
                tj = tw - 1
            lbl = labels[ti, tj]
            if want_aux:
                uvimg[py, px, 0] = u
                uvimg[py, px, 1] = v
                labimg[py, px] = lbl
            oy = py // s
            ox = px // s
            out[oy, ox, 0] += colors[lbl, 0]
            out[oy, ox, 1] += colors[lbl, 1]
            out[oy, ox, 2] += colors[lbl, 2]
    inv = 1.0 / (s * s)
    for oy in range(h):
        for ox in range(w):
            out[oy, ox, 0] *= inv
            out[oy, ox, 1] *= inv
            out[oy, ox, 2] *= inv
    return out, zbuf, tid, b0, b1, uvimg, labimg


@njit(cache=True, fastmath=True)
def _seg_loss(pts, depth, tris, uvs, labels, colors, hs, ws, s, perspective,
              target):
    """Mean squared RGB error of the box-averaged seg render vs target."""
    out = _seg_core(pts, depth, tris, uvs, labels, colors, hs, ws, s,
                    perspective, False)[0]
    h = hs // s
    w = ws // s
    acc = 0.0
    for py in range(h):
        for px in range(w):
            for c in range(3):
                d = out[py, px, c] - target[py, px, c]
                acc += d * d
    return acc / (h * w * 3.0)


def seg_fast_ok(mesh, texture, background=(0.0, 0.0, 0.0),
                shaded: bool | None = None) -> bool:
    """True when the fused seg path reproduces the general render exactly:
    black background, label colors inside [0,1], nothing shaded."""
    if not HAVE_NUMBA or shaded is True or len(mesh.triangles) == 0:
        return False
    if not hasattr(texture, "labels") or not hasattr(texture, "color_table"):
        return False
    bg = np.asarray(background, dtype=float)
    return (not bg.any() and texture.color_table.min() >= 0.0
            and texture.color_table.max() <= 1.0)


class SegRenderContext:
    """Precomputed arrays for repeated seg renders of one rig/camera setup.

    The camera here is the *output* camera; rendering happens on a grid
    `supersample` times finer (the camera resize keeps the subpixel lattice
    aligned) and box-averages back down.
    """

    def __init__(self, mesh, camera, texture, rig=None, supersample: int = 2):
        cam_hi = camera.resized(camera.width * supersample,
                                camera.height * supersample)
        eye, right, up, fwd = cam_hi._basis()
        self.rig = rig
        self.supersample = int(supersample)
        self.hs = cam_hi.height
        self.ws = cam_hi.width
        self.perspective = cam_hi.kind == "pinhole"
        self.focal = float(cam_hi.focal)
        self.scale = float(cam_hi.scale)
        self.cx = cam_hi.width / 2.0
        self.cy = cam_hi.height / 2.0
        self.eye = np.ascontiguousarray(eye)
        self.right = np.ascontiguousarray(right)
        self.up = np.ascontiguousarray(up)
        self.fwd = np.ascontiguousarray(fwd)
        self.tris = np.ascontiguousarray(mesh.triangles)
        self.uvs = np.ascontiguousarray(mesh.uvs)
        self.labels = np.ascontiguousarray(texture.labels.astype(np.int32))
        self.colors = np.ascontiguousarray(texture.color_table.astype(np.float64))
        if rig is not None:
            self.neutral = np.ascontiguousarray(rig.neutral)
            self.deltas = np.ascontiguousarray(rig.deltas)
            self.skinw = np.ascontiguousarray(rig.skin_weights)
            self.jaw_idx = np.asarray(rig.jaw_control_indices, dtype=np.int64)
            self.pivot = np.ascontiguousarray(rig.centroid)
        else:
            self.neutral = np.ascontiguousarray(mesh.vertices)
            self.deltas = np.zeros((0, len(mesh.vertices), 3))
            self.skinw = np.zeros(len(mesh.vertices))
            self.jaw_idx = np.zeros(0, dtype=np.int64)
            self.pivot = np.zeros(3)

    def _project(self, pitch, yaw, w, tx, ty):
        # mirrors rig.evaluate: blend deltas, jaw skinning, rigid pose
        if self.deltas.shape[0]:
            base = self.neutral + np.tensordot(w, self.deltas, axes=1)
        else:
            base = self.neutral
        if len(self.jaw_idx):
            angles = w[self.jaw_idx] @ self.rig.jaw_rotations[self.jaw_idx]
            jaw_rot = rigmod.euler_to_matrix(angles)
            jaw_trans = w @ self.rig.jaw_translations
        else:
            jaw_rot = _EYE3
            jaw_trans = np.zeros(3)
        use_jaw = not np.array_equal(jaw_rot, _EYE3)
        use_head = not (pitch == 0.0 and yaw == 0.0)
        head_rot = rotation_pitch_yaw(pitch, yaw) if use_head else _EYE3
        use_shift = bool(tx or ty)
        return _pose_project(
            np.ascontiguousarray(base), self.skinw,
            np.ascontiguousarray(jaw_rot), np.ascontiguousarray(jaw_trans),
            use_jaw, np.ascontiguousarray(head_rot), use_head, self.pivot,
            float(tx), float(ty), use_shift, self.eye, self.right, self.up,
            self.fwd, self.perspective, self.focal, self.scale,
            self.cx, self.cy)

    def loss(self, pitch, yaw, w, target, tx=0.0, ty=0.0) -> float:
        pts, dep = self._project(pitch, yaw, w, tx, ty)
        return float(_seg_loss(pts, dep, self.tris, self.uvs, self.labels,
                               self.colors, self.hs, self.ws, self.supersample,
                               self.perspective, target))

    def image(self, pitch, yaw, w, tx=0.0, ty=0.0) -> np.ndarray:
        pts, dep = self._project(pitch, yaw, w, tx, ty)
        return _seg_core(pts, dep, self.tris, self.uvs, self.labels,
                         self.colors, self.hs, self.ws, self.supersample,
                         self.perspective, False)[0]

    def render_full(self, pitch, yaw, w, tx=0.0, ty=0.0):
        """Image plus supersampled aux buffers (z, tri id, bary, uv, label)."""
        pts, dep = self._project(pitch, yaw, w, tx, ty)
        out, zbuf, tid, b0, b1, uvimg, labimg = _seg_core(
            pts, dep, self.tris, self.uvs, self.labels, self.colors,
            self.hs, self.ws, self.supersample, self.perspective, True)
        bary = np.dstack((b0, b1, 1.0 - b0 - b1))
        bary[tid < 0] = 0.0
        return out, zbuf, tid, bary, uvimg, labimg
