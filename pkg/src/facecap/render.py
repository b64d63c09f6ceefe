"""Minimal software rasterizer: diffuse/segmented renders, UV rasters,
region-boundary curves, and the image loss with its gradient machinery.

Rendering is deliberately simple (z-buffered barycentric rasterization,
one directional light, point sampling).  The base raster has no
anti-aliasing; an optional supersample factor renders on an aligned finer
grid and box-averages down, which the inverse solve relies on to soften
the pixel loss's staircase.  The differentiable path relies on bilinear
texture sampling and a frozen-visibility chain rule; silhouette gradients
are approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rig as rigmod
from .imageops import bilinear_sample, bilinear_sample_grad, box_resample

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

DEFAULT_LIGHT_DIR = (0.3, 0.4, 1.0)
NEAR_PLANE = 1e-3


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray   # (V, 3)
    triangles: np.ndarray  # (F, 3) int
    uvs: np.ndarray        # (V, 2) in [0,1]^2

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "triangles",
                           np.ascontiguousarray(self.triangles, dtype=np.int64))
        object.__setattr__(self, "uvs", np.asarray(self.uvs, dtype=float))
        if self.triangles.size and self.triangles.max() >= len(self.vertices):
            raise ValueError("triangle index out of range")
        if self.uvs.shape != (len(self.vertices), 2):
            raise ValueError("uvs must be (V, 2)")


@dataclass(frozen=True)
class Camera:
    """Pinhole or orthographic camera looking from `eye` toward `target`.

    Screen x grows to the viewer's right, y down.  Depth is the distance
    along the view direction (positive in front).
    """

    width: int
    height: int
    kind: str = "pinhole"          # "pinhole" | "ortho"
    focal: float = 0.0             # pixels, pinhole
    scale: float = 0.0             # pixels per world unit, ortho
    eye: tuple = (0.0, 0.0, 2.6)
    target: tuple = (0.0, 0.0, 0.0)
    up: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("pinhole", "ortho"):
            raise ValueError("camera kind must be 'pinhole' or 'ortho'")
        if self.kind == "pinhole" and self.focal <= 0:
            raise ValueError("pinhole camera needs focal > 0")
        if self.kind == "ortho" and self.scale <= 0:
            raise ValueError("ortho camera needs scale > 0")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be positive")

    @classmethod
    def frontal(cls, width: int, height: int, distance: float = 2.6,
                kind: str = "pinhole", world_height: float = 2.4) -> "Camera":
        """Head-centered default: 35 mm-equivalent pinhole, or ortho framing
        `world_height` world units vertically."""
        if kind == "pinhole":
            return cls(width, height, "pinhole", focal=35.0 / 36.0 * width,
                       eye=(0.0, 0.0, distance))
        return cls(width, height, "ortho", scale=height / world_height,
                   eye=(0.0, 0.0, distance))

    def resized(self, width: int, height: int) -> "Camera":
        f = width / self.width
        return replace(self, width=width, height=height,
                       focal=self.focal * f, scale=self.scale * f)

    def _basis(self):
        eye = np.asarray(self.eye, dtype=float)
        fwd = np.asarray(self.target, dtype=float) - eye
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(self.up, dtype=float))
        right = right / np.linalg.norm(right)
        up = np.cross(right, fwd)
        return eye, right, up, fwd

    def project(self, points: np.ndarray):
        """World points -> (pixel coords (N, 2), depth (N,))."""
        eye, right, up, fwd = self._basis()
        rel = np.asarray(points, dtype=float) - eye
        x = rel @ right
        y = rel @ up
        z = rel @ fwd
        cx, cy = self.width / 2.0, self.height / 2.0
        if self.kind == "pinhole":
            zs = np.where(np.abs(z) < NEAR_PLANE, NEAR_PLANE, z)
            pix = np.stack([cx + self.focal * x / zs, cy - self.focal * y / zs], axis=1)
        else:
            pix = np.stack([cx + self.scale * x, cy - self.scale * y], axis=1)
        return pix, z

    def project_jacobian(self, points: np.ndarray) -> np.ndarray:
        """d(pixel coords)/d(world point): (N, 2, 3)."""
        eye, right, up, fwd = self._basis()
        rel = np.asarray(points, dtype=float) - eye
        n = len(rel)
        if self.kind == "ortho":
            jac = np.empty((n, 2, 3))
            jac[:, 0, :] = self.scale * right
            jac[:, 1, :] = -self.scale * up
            return jac
        x = rel @ right
        y = rel @ up
        z = np.maximum(rel @ fwd, NEAR_PLANE)
        # u = cx + f x / z -> du = f (dx z - x dz) / z^2
        jac = (self.focal / z[:, None, None]) * np.stack([
            right[None, :] - (x / z)[:, None] * fwd[None, :],
            -(up[None, :] - (y / z)[:, None] * fwd[None, :]),
        ], axis=1)
        return jac


@dataclass(frozen=True)
class SegTexture:
    """Flat region-label texture over UV space plus a region color table.

    Labels are small positive integers; 0 is reserved for the render
    background.  color_table row r holds the RGB color of region id r
    (row 0 is the background color, black by default).
    """

    labels: np.ndarray       # (Ht, Wt) int
    color_table: np.ndarray  # (max_id + 1, 3) float

    def __post_init__(self):
        labels = np.asarray(self.labels)
        table = np.asarray(self.color_table, dtype=float)
        if labels.min() < 1:
            raise ValueError("every texel needs a region id >= 1")
        if labels.max() >= len(table):
            raise ValueError("color table too small for label ids")
        object.__setattr__(self, "labels", labels.astype(np.int32))
        object.__setattr__(self, "color_table", table)

    @property
    def region_ids(self) -> np.ndarray:
        return np.unique(self.labels)

    def to_rgb(self) -> np.ndarray:
        """RGB texture with each texel painted its region color."""
        return self.color_table[self.labels]


@dataclass
class RenderResult:
    image: np.ndarray            # (H, W, 3) float
    depth: np.ndarray            # (H, W) float, inf on background
    tri_id: np.ndarray           # (H, W) int32, -1 on background
    bary: np.ndarray             # (H, W, 3) screen-space barycentrics
    uv: np.ndarray               # (H, W, 2), 0 on background
    label: np.ndarray | None = None  # (H, W) int32 when seg-textured

    @property
    def valid(self) -> np.ndarray:
        return self.tri_id >= 0


# ---------------------------------------------------------------------------
# Visibility kernel
# ---------------------------------------------------------------------------

def _raster_visibility_numpy(pts, depth, tris, h, w, perspective):
    zbuf = np.full((h, w), np.inf)
    tid = np.full((h, w), -1, np.int32)
    bary = np.zeros((h, w, 3))
    inv_depth = 1.0 / np.maximum(depth, NEAR_PLANE)
    for t in range(len(tris)):
        ia, ib, ic = tris[t]
        if perspective and (depth[ia] < NEAR_PLANE or depth[ib] < NEAR_PLANE
                            or depth[ic] < NEAR_PLANE):
            continue
        ax, ay = pts[ia]
        bx, by = pts[ib]
        cx, cy = pts[ic]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0:
            continue
        x0 = max(int(math.ceil(min(ax, bx, cx) - 0.5)), 0)
        x1 = min(int(math.floor(max(ax, bx, cx) - 0.5)), w - 1)
        y0 = max(int(math.ceil(min(ay, by, cy) - 0.5)), 0)
        y1 = min(int(math.floor(max(ay, by, cy) - 0.5)), h - 1)
        if x0 > x1 or y0 > y1:
            continue
        xs = np.arange(x0, x1 + 1) + 0.5
        ys = (np.arange(y0, y1 + 1) + 0.5)[:, None]
        inv_area = 1.0 / area
        w0 = ((cx - bx) * (ys - by) - (cy - by) * (xs - bx)) * inv_area
        w1 = ((ax - cx) * (ys - cy) - (ay - cy) * (xs - cx)) * inv_area
        w2 = 1.0 - w0 - w1
        mask = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        if not mask.any():
            continue
        if perspective:
            iz = w0 * inv_depth[ia] + w1 * inv_depth[ib] + w2 * inv_depth[ic]
            z = 1.0 / np.maximum(iz, 1e-12)
        else:
            z = w0 * depth[ia] + w1 * depth[ib] + w2 * depth[ic]
        block = zbuf[y0:y1 + 1, x0:x1 + 1]
        upd = mask & (z < block)
        if not upd.any():
            continue
        block[upd] = z[upd]
        tid[y0:y1 + 1, x0:x1 + 1][upd] = t
        bb = bary[y0:y1 + 1, x0:x1 + 1]
        bb[upd, 0] = np.broadcast_to(w0, upd.shape)[upd]
        bb[upd, 1] = np.broadcast_to(w1, upd.shape)[upd]
        bb[upd, 2] = np.broadcast_to(w2, upd.shape)[upd]
    return zbuf, tid, bary


if _HAVE_NUMBA:

    @njit(cache=True)
    def _raster_visibility_numba(pts, depth, tris, h, w, perspective):  # pragma: no cover
        zbuf = np.full((h, w), np.inf)
        tid = np.full((h, w), -1, np.int32)
        bary = np.zeros((h, w, 3))
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
            x0 = max(int(math.ceil(minx - 0.5)), 0)
            x1 = min(int(math.floor(maxx - 0.5)), w - 1)
            y0 = max(int(math.ceil(miny - 0.5)), 0)
            y1 = min(int(math.floor(maxy - 0.5)), h - 1)
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
                        iz = (w0 / depth[ia] + w1 / depth[ib] + w2 / depth[ic])
                        if iz < 1e-12:
                            continue
                        z = 1.0 / iz
                    else:
                        z = w0 * depth[ia] + w1 * depth[ib] + w2 * depth[ic]
                    if z < zbuf[py, px]:
                        zbuf[py, px] = z
                        tid[py, px] = t
                        bary[py, px, 0] = w0
                        bary[py, px, 1] = w1
                        bary[py, px, 2] = w2
        return zbuf, tid, bary


def _raster_visibility(pts, depth, tris, h, w, perspective):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    depth = np.ascontiguousarray(depth, dtype=np.float64)
    if _HAVE_NUMBA:
        return _raster_visibility_numba(pts, depth, tris, h, w, perspective)
    return _raster_visibility_numpy(pts, depth, tris, h, w, perspective)


def _vertex_normals(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    n = np.zeros_like(verts)
    a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    face_n = np.cross(b - a, c - a)
    for k in range(3):
        np.add.at(n, tris[:, k], face_n)
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    return n / np.maximum(norm, 1e-12)


def posed_vertices(mesh: Mesh, rig: rigmod.BlendshapeRig | None,
                   params: rigmod.PoseParams | None) -> np.ndarray:
    if rig is not None and params is not None:
        return rigmod.evaluate(rig, params)
    return mesh.vertices


def rasterize(mesh: Mesh, camera: Camera, texture=None,
              rig: rigmod.BlendshapeRig | None = None,
              params: rigmod.PoseParams | None = None,
              shaded: bool | None = None,
              light_dir=DEFAULT_LIGHT_DIR, ambient: float = 0.0,
              sample: str = "bilinear",
              background=(0.0, 0.0, 0.0),
              supersample: int = 1) -> RenderResult:
    """Render the (optionally rig-posed) mesh.

    texture: None for a flat gray albedo, an (Ht, Wt, 3) RGB array, or a
    SegTexture (rendered with exact region colors, unshaded by default).
    Shading multiplies the albedo by a single directional Lambert term.

    supersample=s renders on an aligned grid s times finer and returns the
    box-averaged image; the auxiliary buffers (depth, tri_id, bary, uv,
    label) stay at the supersampled resolution that produced it.
    """
    if supersample < 1:
        raise ValueError("supersample must be >= 1")
    if supersample > 1:
        return _rasterize_supersampled(mesh, camera, texture, rig, params,
                                       shaded, light_dir, ambient, sample,
                                       background, supersample)
    h, w = camera.height, camera.width
    verts = posed_vertices(mesh, rig, params)
    if len(mesh.triangles) == 0:
        img = np.broadcast_to(np.asarray(background, dtype=float), (h, w, 3)).copy()
        return RenderResult(image=img, depth=np.full((h, w), np.inf),
                            tri_id=np.full((h, w), -1, np.int32),
                            bary=np.zeros((h, w, 3)), uv=np.zeros((h, w, 2)),
                            label=np.zeros((h, w), np.int32)
                            if isinstance(texture, SegTexture) else None)

    pts, depth = camera.project(verts)
    zbuf, tid, bary = _raster_visibility(pts, depth, mesh.triangles, h, w,
                                         camera.kind == "pinhole")

    covered = tid >= 0
    image = np.broadcast_to(np.asarray(background, dtype=float), (h, w, 3)).copy()
    uv_img = np.zeros((h, w, 2))
    label_img = np.zeros((h, w), np.int32) if isinstance(texture, SegTexture) else None
    if not covered.any():
        return RenderResult(image=image, depth=zbuf, tri_id=tid, bary=bary,
                            uv=uv_img, label=label_img)

    tri = tid[covered]
    lam = bary[covered]
    ids = mesh.triangles[tri]
    if camera.kind == "pinhole":
        iz = 1.0 / np.maximum(depth[ids], NEAR_PLANE)
        wgt = lam * iz
        wgt = wgt / wgt.sum(axis=1, keepdims=True)
    else:
        wgt = lam
    uv = np.einsum("pk,pkd->pd", wgt, mesh.uvs[ids])
    uv_img[covered] = uv

    if isinstance(texture, SegTexture):
        th, tw = texture.labels.shape
        ti = np.clip((uv[:, 1] * th).astype(int), 0, th - 1)
        tj = np.clip((uv[:, 0] * tw).astype(int), 0, tw - 1)
        pix_labels = texture.labels[ti, tj]
        label_img[covered] = pix_labels
        albedo = texture.color_table[pix_labels]
        if shaded is None:
            shaded = False
    elif texture is None:
        albedo = np.full((len(uv), 3), 0.75)
    else:
        tex = np.asarray(texture, dtype=float)
        if sample == "bilinear":
            albedo = bilinear_sample(tex, uv)
        else:
            th, tw = tex.shape[:2]
            ti = np.clip((uv[:, 1] * th).astype(int), 0, th - 1)
            tj = np.clip((uv[:, 0] * tw).astype(int), 0, tw - 1)
            albedo = tex[ti, tj]
    if shaded is None:
        shaded = True

    if shaded:
        normals = _vertex_normals(verts, mesh.triangles)
        n_pix = np.einsum("pk,pkd->pd", lam, normals[ids])
        n_pix = n_pix / np.maximum(np.linalg.norm(n_pix, axis=1, keepdims=True), 1e-12)
        light = np.asarray(light_dir, dtype=float)
        light = light / np.linalg.norm(light)
        lambert = np.maximum(n_pix @ light, 0.0)
        shade = ambient + (1.0 - ambient) * lambert
        albedo = albedo * shade[:, None]

    image[covered] = np.clip(albedo, 0.0, 1.0)
    return RenderResult(image=image, depth=zbuf, tri_id=tid, bary=bary,
                        uv=uv_img, label=label_img)


def _rasterize_supersampled(mesh, camera, texture, rig, params, shaded,
                            light_dir, ambient, sample, background, s):
    from . import _fast

    fast_ok = (isinstance(texture, SegTexture)
               and _fast.seg_fast_ok(mesh, texture, background, shaded))
    if fast_ok:
        use_rig = rig if (rig is not None and params is not None) else None
        ctx = _fast.SegRenderContext(mesh, camera, texture, rig=use_rig,
                                     supersample=s)
        if use_rig is not None:
            image, zbuf, tid, bary, uvimg, labimg = ctx.render_full(
                params.pitch, params.yaw, params.w, params.tx, params.ty)
        else:
            image, zbuf, tid, bary, uvimg, labimg = ctx.render_full(
                0.0, 0.0, np.zeros(0))
        return RenderResult(image=image, depth=zbuf, tri_id=tid, bary=bary,
                            uv=uvimg, label=labimg)

    cam_hi = camera.resized(camera.width * s, camera.height * s)
    res = rasterize(mesh, cam_hi, texture=texture, rig=rig, params=params,
                    shaded=shaded, light_dir=light_dir, ambient=ambient,
                    sample=sample, background=background)
    # sequential block sums in the same order as the fused kernel, so both
    # routes agree to the bit on a black background
    img4 = res.image.reshape(camera.height, s, camera.width, s, 3)
    acc = np.zeros((camera.height, camera.width, 3))
    for dy in range(s):
        for dx in range(s):
            acc += img4[:, dy, :, dx, :]
    image = acc * (1.0 / (s * s))
    return RenderResult(image=image, depth=res.depth, tri_id=res.tri_id,
                        bary=res.bary, uv=res.uv, label=res.label)


def rasterize_uv(mesh: Mesh, camera: Camera,
                 rig: rigmod.BlendshapeRig | None = None,
                 params: rigmod.PoseParams | None = None):
    """Per-pixel rasterization of the model's UV coordinates.

    Returns (uv (H, W, 2), valid (H, W) bool); uncovered pixels are invalid.
    """
    result = rasterize(mesh, camera, texture=None, rig=rig, params=params,
                       shaded=False)
    return result.uv, result.valid


# ---------------------------------------------------------------------------
# Region boundary curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryCurve:
    points: np.ndarray   # (K, 2) polyline on the pixel-corner lattice, (x, y)
    regions: tuple       # (lo, hi) label pair the curve separates


@dataclass(frozen=True)
class JunctionPoint:
    point: np.ndarray    # (2,) lattice position
    regions: tuple       # 3+ labels meeting here


def extract_region_boundaries(labels: np.ndarray):
    """Trace label-discontinuity contours of a segmented image.

    Boundary segments live on the pixel-corner lattice between 4-adjacent
    pixels with different labels.  Segments sharing a region pair are
    chained into polylines; lattice corners where three or more labels meet
    are reported as junction points and terminate chains.

    Returns (curves, junctions).
    """
    labels = np.asarray(labels)
    h, w = labels.shape

    # corner -> set of labels of the up-to-4 touching pixels
    junctions = {}
    for cy in range(h + 1):
        for cx in range(w + 1):
            touch = set()
            for r, c in ((cy - 1, cx - 1), (cy - 1, cx), (cy, cx - 1), (cy, cx)):
                if 0 <= r < h and 0 <= c < w:
                    touch.add(int(labels[r, c]))
            if len(touch) >= 3:
                junctions[(cx, cy)] = tuple(sorted(touch))

    # segments keyed by region pair
    segments = {}

    def add(pair, p0, p1):
        segments.setdefault(pair, []).append((p0, p1))

    diff_h = labels[:, :-1] != labels[:, 1:]
    for r, c in zip(*np.nonzero(diff_h)):
        pair = tuple(sorted((int(labels[r, c]), int(labels[r, c + 1]))))
        add(pair, (c + 1, r), (c + 1, r + 1))
    diff_v = labels[:-1, :] != labels[1:, :]
    for r, c in zip(*np.nonzero(diff_v)):
        pair = tuple(sorted((int(labels[r, c]), int(labels[r + 1, c]))))
        add(pair, (c, r + 1), (c + 1, r + 1))

    curves = []
    for pair in sorted(segments):
        curves.extend(_chain_segments(segments[pair], pair, junctions))
    junction_list = [JunctionPoint(point=np.array(p, dtype=float), regions=tags)
                     for p, tags in sorted(junctions.items())]
    return curves, junction_list


def _chain_segments(segs, pair, junctions):
    adj = {}
    for s in segs:
        p0, p1 = s
        adj.setdefault(p0, []).append(p1)
        adj.setdefault(p1, []).append(p0)
    # chain ends: degree-1 corners or junction corners
    is_end = {p: (len(n) != 2 or p in junctions) for p, n in adj.items()}
    unused = {s for s in segs} | {(p1, p0) for p0, p1 in segs}

    def take(p0, p1):
        unused.discard((p0, p1))
        unused.discard((p1, p0))

    chains = []
    starts = sorted([p for p in adj if is_end[p]])
    for start in starts:
        for nxt in sorted(adj[start]):
            if (start, nxt) not in unused:
                continue
            chain = [start, nxt]
            take(start, nxt)
            while not is_end[chain[-1]]:
                cur = chain[-1]
                options = [q for q in adj[cur] if (cur, q) in unused]
                if not options:
                    break
                nxt = sorted(options)[0]
                chain.append(nxt)
                take(cur, nxt)
            chains.append(chain)
    # remaining segments form closed loops
    while unused:
        start, nxt = sorted(unused)[0]
        chain = [start, nxt]
        take(start, nxt)
        while chain[-1] != start:
            cur = chain[-1]
            options = [q for q in adj[cur] if (cur, q) in unused]
            if not options:
                break
            nxt = sorted(options)[0]
            chain.append(nxt)
            take(cur, nxt)
        chains.append(chain)

    out = []
    for chain in chains:
        pts = _merge_collinear(np.array(chain, dtype=float))
        out.append(BoundaryCurve(points=pts, regions=pair))
    return out


def _merge_collinear(pts: np.ndarray) -> np.ndarray:
    if len(pts) <= 2:
        return pts
    keep = [pts[0]]
    for i in range(1, len(pts) - 1):
        d0 = pts[i] - keep[-1]
        d1 = pts[i + 1] - pts[i]
        if abs(d0[0] * d1[1] - d0[1] * d1[0]) > 1e-12:
            keep.append(pts[i])
    keep.append(pts[-1])
    return np.array(keep)


# ---------------------------------------------------------------------------
# Image loss and gradients
# ---------------------------------------------------------------------------

POSE_SLOTS = (("pitch",), ("yaw",))
TRANSLATION_SLOTS = (("tx",), ("ty",))


def w_slot(i: int):
    return ("w", i)


def get_slot(params: rigmod.PoseParams, slot) -> float:
    if slot[0] == "w":
        return float(params.w[slot[1]])
    return float(getattr(params, slot[0]))


def set_slots(params: rigmod.PoseParams, slots, values) -> rigmod.PoseParams:
    kw = {}
    w = None
    for slot, val in zip(slots, values):
        if slot[0] == "w":
            if w is None:
                w = params.w.copy()
            w[slot[1]] = val
        else:
            kw[slot[0]] = float(val)
    if w is not None:
        kw["w"] = w
    return params.replace(**kw)


def _as_rgb_texture(texture) -> np.ndarray:
    if isinstance(texture, SegTexture):
        return texture.to_rgb()
    if texture is None:
        return np.full((1, 1, 3), 0.75)
    return np.asarray(texture, dtype=float)


def image_loss(target: np.ndarray, mesh: Mesh, camera: Camera,
               rig: rigmod.BlendshapeRig, params: rigmod.PoseParams,
               texture, sample: str = "bilinear",
               supersample: int = 1) -> float:
    """Mean squared RGB difference between the render and the target.

    The render stays in the texture's own domain: a segmentation texture
    is drawn with exact label colors, not a smoothed RGB copy, so the loss
    against a target rendered the same way has its minimum at zero."""
    result = rasterize(mesh, camera, texture=texture, rig=rig, params=params,
                       shaded=False, sample=sample, supersample=supersample)
    diff = result.image - np.asarray(target, dtype=float)
    return float((diff ** 2).mean())


def _fd_step_for(slot) -> float:
    return 0.25 if slot[0] in ("pitch", "yaw") else 0.01


def image_loss_grad(target: np.ndarray, mesh: Mesh, camera: Camera,
                    rig: rigmod.BlendshapeRig, params: rigmod.PoseParams,
                    texture, slots, method: str = "fixed-correspondence",
                    grad_size: int | None = None, fd_steps=None):
    """Image loss plus its gradient over the given parameter slots.

    Slots are ("pitch",), ("yaw",), ("tx",), ("ty",), or ("w", i).  The
    loss is evaluated at the camera's resolution; gradients are computed at
    `grad_size` (square pyramid level, default: same resolution).

    method "finite-diff": central differences per slot.
    method "fixed-correspondence": analytic chain rule with the triangle-id
    buffer frozen at the current parameters and bilinear texture sampling;
    silhouette-crossing effects are ignored, and a segmentation texture is
    approximated by its smooth RGB image (differentiable but blurred at
    region boundaries).
    """
    target = np.asarray(target, dtype=float)
    loss = image_loss(target, mesh, camera, rig, params, texture)

    if grad_size is not None and (grad_size != camera.width or grad_size != camera.height):
        cam_g = camera.resized(grad_size, grad_size)
        target_g = box_resample(target, grad_size, grad_size)
    else:
        cam_g, target_g = camera, target

    if method == "finite-diff":
        grad = np.empty(len(slots))
        for s, slot in enumerate(slots):
            h = fd_steps[s] if fd_steps is not None else _fd_step_for(slot)
            x0 = get_slot(params, slot)
            lp = image_loss(target_g, mesh, cam_g, rig,
                            set_slots(params, [slot], [x0 + h]), texture)
            lm = image_loss(target_g, mesh, cam_g, rig,
                            set_slots(params, [slot], [x0 - h]), texture)
            grad[s] = (lp - lm) / (2 * h)
        return loss, grad
    if method != "fixed-correspondence":
        raise ValueError(f"unknown gradient method {method!r}")
    grad = _fixed_correspondence_grad(target_g, mesh, cam_g, rig, params,
                                      _as_rgb_texture(texture), slots)
    return loss, grad


def _fixed_correspondence_grad(target, mesh, camera, rig, params, tex, slots):
    result = rasterize(mesh, camera, texture=tex, rig=rig, params=params,
                       shaded=False, sample="bilinear")
    covered = result.valid
    n_terms = target.size  # mean over H*W*3
    if not covered.any():
        return np.zeros(len(slots))

    tri = result.tri_id[covered]
    lam = result.bary[covered]                       # (P, 3)
    uv = result.uv[covered]                          # (P, 2)
    residual = result.image[covered] - target[covered]  # (P, 3)

    used_tris = np.unique(tri)
    ids_all = mesh.triangles                          # (F, 3)
    used_verts = np.unique(ids_all[used_tris])

    verts = posed_vertices(mesh, rig, params)
    pts2, _ = camera.project(verts)

    # vertex -> parameter motion, restricted to used vertices
    n_slots = len(slots)
    dvert = np.zeros((len(used_verts), 3, n_slots))
    w_cols = [i for i, s in enumerate(slots) if s[0] == "w"]
    if w_cols:
        jw = rigmod.jacobian_w(rig, params, vertex_subset=used_verts)
        for i in w_cols:
            dvert[:, :, i] = jw[:, :, slots[i][1]]
    pose_cols = [i for i, s in enumerate(slots) if s[0] in ("pitch", "yaw")]
    if pose_cols:
        jp = rigmod.jacobian_pose(rig, params, vertex_subset=used_verts)
        for i in pose_cols:
            dvert[:, :, i] = jp[:, :, 0 if slots[i][0] == "pitch" else 1]
    for i, s in enumerate(slots):
        if s[0] == "tx":
            dvert[:, 0, i] = 1.0
        elif s[0] == "ty":
            dvert[:, 1, i] = 1.0

    jcam = camera.project_jacobian(verts[used_verts])            # (U, 2, 3)
    dproj = np.einsum("uij,ujs->uis", jcam, dvert)               # (U, 2, S)

    remap = np.full(len(verts), -1)
    remap[used_verts] = np.arange(len(used_verts))
    ids = remap[ids_all[tri]]                                    # (P, 3)

    # screen-space motion of the frozen surface point under each slot
    dmotion = np.einsum("pk,pkis->pis", lam, dproj[ids])         # (P, 2, S)

    # per-triangle -G M^{-1}: uv change per unit screen motion of the point
    a2, b2, c2 = (pts2[ids_all[used_tris, k]] for k in range(3))
    e1 = b2 - a2
    e2 = c2 - a2
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    det = np.where(np.abs(det) < 1e-12, 1e-12, det)
    minv = np.empty((len(used_tris), 2, 2))
    minv[:, 0, 0] = e2[:, 1] / det
    minv[:, 0, 1] = -e2[:, 0] / det
    minv[:, 1, 0] = -e1[:, 1] / det
    minv[:, 1, 1] = e1[:, 0] / det
    ua = mesh.uvs[ids_all[used_tris, 0]]
    g = np.stack([mesh.uvs[ids_all[used_tris, 1]] - ua,
                  mesh.uvs[ids_all[used_tris, 2]] - ua], axis=2)  # (T, 2, 2)
    flow = -np.einsum("tij,tjk->tik", g, minv)                    # (T, 2, 2)

    tri_remap = np.full(len(ids_all), -1)
    tri_remap[used_tris] = np.arange(len(used_tris))
    duv = np.einsum("pij,pjs->pis", flow[tri_remap[tri]], dmotion)  # (P, 2, S)

    dcdu, dcdv = bilinear_sample_grad(tex, uv)                    # (P, 3) each
    dimage = dcdu[:, :, None] * duv[:, None, 0, :] + dcdv[:, :, None] * duv[:, None, 1, :]
    grad = (2.0 / n_terms) * np.einsum("pc,pcs->s", residual, dimage)
    return grad
