"""Curation features: head pose, parts-aligned expression, nose-crop lighting.

All three are designed to be as appearance-agnostic as practical so that a
tree built from one subject's footage can be queried with another's images.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geom
from .errors import OutOfBounds
from .imageops import box_resample

POSE = "pose"
EXPRESSION = "expression"
LIGHTING = "lighting"

# 68-landmark convention index groups.
LEFT_EYE_INDICES = tuple(range(36, 42))
RIGHT_EYE_INDICES = tuple(range(42, 48))
MOUTH_INDICES = tuple(range(48, 68))
NOSE_INDICES = tuple(range(27, 36))

LIGHTING_GRID = (4, 3)  # rows x cols over the nose crop
NOSE_CROP_PAD = 0.10


@dataclass(frozen=True)
class FeatureVector:
    """A typed curation feature; length is fixed per kind."""

    kind: str
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise ValueError("feature values must be finite")
        if self.kind == POSE and vals.shape != (2,):
            raise ValueError("pose feature must have length 2")
        if self.kind == LIGHTING and vals.shape != (LIGHTING_GRID[0] * LIGHTING_GRID[1] * 3,):
            raise ValueError("lighting feature must have length 36")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class PartSpec:
    """Landmark groups aligned independently for the expression feature."""

    groups: tuple            # tuple of index tuples
    templates: tuple         # per-group (n_i, 2) template points

    def __post_init__(self):
        if not self.groups:
            raise ValueError("groups must be non-empty")
        for g, t in zip(self.groups, self.templates):
            if max(g) >= 68 or min(g) < 0:
                raise ValueError("group indices must be < 68")
            if np.asarray(t).shape != (len(g), 2):
                raise ValueError("template shape must match its group")

    @classmethod
    def from_reference(cls, reference_points: np.ndarray,
                       groups: tuple | None = None) -> "PartSpec":
        """Build part templates by slicing a reference landmark set.

        Default groups: left eye, right eye, mouth (outer + inner).
        """
        pts = np.asarray(reference_points, dtype=float)
        groups = groups or (LEFT_EYE_INDICES, RIGHT_EYE_INDICES, MOUTH_INDICES)
        templates = tuple(pts[list(g)].copy() for g in groups)
        return cls(groups=groups, templates=templates)


def pose_feature(landmarks: geom.LandmarkSet, template: geom.TemplateModel,
                 config: geom.PoseFitConfig | None = None) -> np.ndarray:
    """(pitch, yaw) in degrees, via template fitting of the rigid landmarks."""
    fit = geom.fit_pitch_yaw(landmarks, template, config)
    return np.array([fit.pitch, fit.yaw])


def expression_feature(landmarks: geom.LandmarkSet, parts: PartSpec) -> np.ndarray:
    """Concatenated part-aligned landmark coordinates.

    Each group is similarity-aligned (scale, rotation, translation) to its
    template, which removes global head placement from the comparison and
    normalizes for facial proportions per part.
    """
    pieces = []
    for group, tmpl in zip(parts.groups, parts.templates):
        src = landmarks.points[list(group)]
        T = geom.rigid_align(src, np.asarray(tmpl, dtype=float))
        pieces.append(T.apply(src).ravel())
    return np.concatenate(pieces)


def lighting_feature(image: np.ndarray, landmarks: geom.LandmarkSet) -> np.ndarray:
    """Nose-crop environmental lighting proxy, 4x3 RGB cells flattened to 36.

    The nose region is nearly rigid and spans a wide range of surface
    normals, so an area-averaged crop of it approximates the incident
    lighting.  Crop: bounding box of the 9 nose landmarks padded by 10%,
    clamped to the image.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) RGB image")
    h, w = image.shape[:2]
    nose = landmarks.points[list(NOSE_INDICES)]
    xs = nose[:, 0] * w
    ys = nose[:, 1] * h
    x0, x1 = xs.min(), xs.max()
    y0, y1 = ys.min(), ys.max()
    px = (x1 - x0) * NOSE_CROP_PAD
    py = (y1 - y0) * NOSE_CROP_PAD
    c0 = max(int(np.floor(x0 - px)), 0)
    c1 = min(int(np.ceil(x1 + px)), w)
    r0 = max(int(np.floor(y0 - py)), 0)
    r1 = min(int(np.ceil(y1 + py)), h)
    if c1 - c0 < 1 or r1 - r0 < 1:
        raise OutOfBounds("nose crop does not intersect the image")
    crop = image[r0:r1, c0:c1]
    grid = box_resample(crop, LIGHTING_GRID[0], LIGHTING_GRID[1])
    return grid.reshape(-1)


def extract_all(image: np.ndarray, landmarks: geom.LandmarkSet,
                template: geom.TemplateModel, parts: PartSpec,
                config: geom.PoseFitConfig | None = None) -> dict:
    """All three curation features for one image, keyed by kind."""
    return {
        POSE: pose_feature(landmarks, template, config),
        EXPRESSION: expression_feature(landmarks, parts),
        LIGHTING: lighting_feature(image, landmarks),
    }
