"""Texture synthesis by photon splatting and k-NN gathering.

Every valid pixel of a rendered or matched image is copied into UV space
as a particle sample; texels then collect their k nearest samples with an
inverse-distance weighted average.  The radius needed to find k samples
doubles as a per-texel confidence (tight discs mean dense, trustworthy
coverage).  A confidence-weighted merge combines a detail-preferred face
pass with a broad-coverage head pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .index import ClusterNode, query

GATHER_K = 8
GATHER_EPSILON = 1e-4
RADIUS_CUTOFF = 0.05
FACE_PREFERENCE = 4.0


@dataclass(frozen=True)
class PhotonMap:
    """Color particle samples scattered over the unit UV square."""

    uv: np.ndarray         # (N, 2) in [0,1]^2
    color: np.ndarray      # (N, 3)
    source_id: np.ndarray  # (N,) int

    def __post_init__(self):
        uv = np.asarray(self.uv, dtype=float).reshape(-1, 2)
        color = np.asarray(self.color, dtype=float).reshape(-1, 3)
        sid = np.asarray(self.source_id, dtype=np.int64).reshape(-1)
        if not (len(uv) == len(color) == len(sid)):
            raise ValueError("uv, color, source_id lengths differ")
        if len(uv) and (uv.min() < 0.0 or uv.max() > 1.0):
            raise ValueError("uv samples must lie in the unit square")
        object.__setattr__(self, "uv", uv)
        object.__setattr__(self, "color", color)
        object.__setattr__(self, "source_id", sid)

    @classmethod
    def empty(cls) -> "PhotonMap":
        return cls(uv=np.zeros((0, 2)), color=np.zeros((0, 3)),
                   source_id=np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.uv)

    def tree(self) -> cKDTree:
        return cKDTree(self.uv)


@dataclass
class TextureMap:
    color: np.ndarray       # (H, W, 3)
    confidence: np.ndarray  # (H, W), 0 where invalid
    valid: np.ndarray       # (H, W) bool

    def __post_init__(self):
        self.confidence = np.where(self.valid, self.confidence, 0.0)

    @classmethod
    def invalid(cls, height: int, width: int) -> "TextureMap":
        return cls(color=np.zeros((height, width, 3)),
                   confidence=np.zeros((height, width)),
                   valid=np.zeros((height, width), dtype=bool))


def splat(image: np.ndarray, uv_raster: np.ndarray, valid: np.ndarray,
          pmap: PhotonMap, source_id: int = 0) -> PhotonMap:
    """Copy every valid pixel's color into UV space as a particle sample."""
    image = np.asarray(image, dtype=float)
    uv_raster = np.asarray(uv_raster, dtype=float)
    if image.shape[:2] != uv_raster.shape[:2]:
        raise ValueError("image and uv raster dimensions differ")
    valid = np.asarray(valid, dtype=bool)
    uv = np.clip(uv_raster[valid], 0.0, 1.0)
    color = image[valid]
    sid = np.full(len(uv), source_id, dtype=np.int64)
    return PhotonMap(uv=np.concatenate([pmap.uv, uv]),
                     color=np.concatenate([pmap.color, color]),
                     source_id=np.concatenate([pmap.source_id, sid]))


def gather(pmap: PhotonMap, resolution, k: int = GATHER_K,
           epsilon: float = GATHER_EPSILON,
           cutoff: float = RADIUS_CUTOFF) -> TextureMap:
    """Estimate a texture by collecting each texel's k nearest samples.

    The disc radius r reaching the k-th sample sets the confidence
    1/(epsilon + r); texels whose disc exceeds `cutoff` are invalid, as is
    everything when the map holds fewer than k distinct samples.

    Exact duplicate samples (same uv and color) collapse to one before the
    nearest-neighbor search, so uniformly densifying the map never biases
    the estimate.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(resolution, int):
        height = width = resolution
    else:
        width, height = resolution
    samples = np.unique(np.hstack([pmap.uv, pmap.color]), axis=0)
    if len(samples) < k:
        return TextureMap.invalid(height, width)
    uv, colors = samples[:, :2], samples[:, 2:]

    jj, ii = np.meshgrid(np.arange(width), np.arange(height))
    centers = np.stack([(jj.ravel() + 0.5) / width,
                        (ii.ravel() + 0.5) / height], axis=1)
    dist, idx = cKDTree(uv).query(centers, k=k)
    dist = dist.reshape(-1, k)
    idx = idx.reshape(-1, k)

    weights = 1.0 / (epsilon + dist)
    color = np.einsum("tk,tkc->tc", weights, colors[idx]) / weights.sum(axis=1)[:, None]
    radius = dist[:, -1]
    valid = radius <= cutoff
    confidence = np.where(valid, 1.0 / (epsilon + radius), 0.0)
    return TextureMap(color=color.reshape(height, width, 3),
                      confidence=confidence.reshape(height, width),
                      valid=valid.reshape(height, width))


def merge(face: TextureMap, head: TextureMap,
          preference: float = FACE_PREFERENCE) -> TextureMap:
    """Confidence-weighted blend preferring the face pass by `preference`."""
    if face.color.shape != head.color.shape:
        raise ValueError("texture maps must share a resolution")
    if preference < 1.0:
        raise ValueError("preference multiplier must be >= 1")
    wf = preference * face.confidence
    wh = head.confidence
    total = wf + wh
    safe = np.where(total > 0, total, 1.0)
    color = (wf[..., None] * face.color + wh[..., None] * head.color) / safe[..., None]
    valid = total > 0
    confidence = np.maximum(wf, wh)
    return TextureMap(color=np.where(valid[..., None], color, 0.0),
                      confidence=confidence, valid=valid)


def curate_turntable(render_features: list, root: ClusterNode,
                     match_counts: tuple = (2, 3, 1), config=None) -> list:
    """Match each turntable render against the footage index.

    render_features: iterable of per-render feature dicts (pose, lighting,
    expression).  Returns the de-duplicated, sorted union of matched
    source ids across all renders.
    """
    matched = set()
    for feats in render_features:
        matched.update(query(root, feats, match_counts, config))
    return sorted(matched)
