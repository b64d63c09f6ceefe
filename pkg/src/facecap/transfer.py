"""Domain transfer between real-photo and synthetic-render images, plus
latent-space dataset curation.

The production system would plug a trained dual-decoder autoencoder into
the DomainTransfer interface.  PcaTransfer is the linear stand-in used
here: one shared orthonormal basis over downsampled images defines the
latent space, and each domain decodes by projecting latents onto an
affine subspace fit to that domain alone.  Everything downstream (outlier
scoring, contraction, expansion) only relies on encode/decode semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InsufficientData
from .imageops import box_resample
from .rig import BlendshapeRig, PoseParams

THUMB_SIZE = 64
DEFAULT_LATENT_DIM = 512


class DomainTransfer:
    """encode/decode seam between image domains; implementations are
    immutable after fit and their methods pure."""

    def encode(self, image: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def decode_real(self, latent: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def decode_synthetic(self, latent: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _thumbnail(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if image.shape[:2] != (THUMB_SIZE, THUMB_SIZE):
        image = box_resample(image, THUMB_SIZE, THUMB_SIZE)
    return image.ravel()


def _subspace(latents: np.ndarray):
    """Affine subspace (mean, orthonormal directions) spanning the rows."""
    mean = latents.mean(axis=0)
    centered = latents - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if len(s) and s[0] > 0:
        keep = s > 1e-10 * s[0]
        basis = vt[keep]
    else:
        basis = vt[:0]
    return mean, basis


@dataclass(frozen=True)
class PcaTransfer(DomainTransfer):
    mean: np.ndarray        # (D,) pixel-space mean of the combined set
    basis: np.ndarray       # (d, D) orthonormal rows, shared latent basis
    real_mean: np.ndarray   # (d,) latent-space domain anchors
    real_basis: np.ndarray  # (r, d) orthonormal rows
    synth_mean: np.ndarray
    synth_basis: np.ndarray

    @property
    def latent_dim(self) -> int:
        return len(self.basis)

    def encode(self, image: np.ndarray) -> np.ndarray:
        return self.basis @ (_thumbnail(image) - self.mean)

    def _decode(self, latent, dom_mean, dom_basis):
        latent = np.asarray(latent, dtype=float)
        rel = latent - dom_mean
        projected = dom_mean + dom_basis.T @ (dom_basis @ rel)
        flat = self.mean + self.basis.T @ projected
        return flat.reshape(THUMB_SIZE, THUMB_SIZE, 3)

    def decode_real(self, latent: np.ndarray) -> np.ndarray:
        return self._decode(latent, self.real_mean, self.real_basis)

    def decode_synthetic(self, latent: np.ndarray) -> np.ndarray:
        return self._decode(latent, self.synth_mean, self.synth_basis)


def fit_pca_transfer(real_images: list, synthetic_images: list,
                     d: int = DEFAULT_LATENT_DIM) -> PcaTransfer:
    """Fit the shared basis on both image sets and per-domain subspaces
    on each set alone."""
    if d < 1:
        raise ValueError("latent dimension must be >= 1")
    flats = [_thumbnail(im) for im in real_images]
    flats += [_thumbnail(im) for im in synthetic_images]
    n_real = len(real_images)
    if len(flats) < d:
        raise InsufficientData(
            f"need at least {d} images to fit a {d}-dim basis, got {len(flats)}")
    x = np.stack(flats)
    mean = x.mean(axis=0)
    _, s, vt = np.linalg.svd(x - mean, full_matrices=False)
    if (s > 1e-10 * max(s[0], 1e-300)).sum() < d:
        raise InsufficientData(f"image set has rank < {d}")
    basis = vt[:d]

    latents = (x - mean) @ basis.T
    real_mean, real_basis = _subspace(latents[:n_real])
    synth_mean, synth_basis = _subspace(latents[n_real:])
    return PcaTransfer(mean=mean, basis=basis,
                       real_mean=real_mean, real_basis=real_basis,
                       synth_mean=synth_mean, synth_basis=synth_basis)


# ---------------------------------------------------------------------------
# Synthetic parameter sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleConfig:
    n_samples: int = 4000
    region_caps: tuple = ()            # ((control indices...), cap) pairs
    pitch_range: tuple = (-10.0, 10.0)
    yaw_range: tuple = (-80.0, 80.0)
    seed: int = 0

    def __post_init__(self):
        for indices, cap in self.region_caps:
            if cap < 0:
                raise ValueError("region caps must be nonnegative")
        for lo, hi in (self.pitch_range, self.yaw_range):
            if lo > hi:
                raise ValueError("ranges must be ordered")


def _truncated_normal(rng, lo, hi, size):
    """Gaussian centered on the range midpoint, sigma = half-range,
    rejection-sampled into [lo, hi]."""
    center = 0.5 * (lo + hi)
    sigma = 0.5 * (hi - lo)
    if sigma == 0:
        return np.full(size, center)
    out = np.empty(size)
    remaining = np.arange(size)
    while len(remaining):
        draw = rng.normal(center, sigma, len(remaining))
        ok = (draw >= lo) & (draw <= hi)
        out[remaining[ok]] = draw[ok]
        remaining = remaining[~ok]
    return out


def _apply_caps(w: np.ndarray, region_caps) -> np.ndarray:
    for indices, cap in region_caps:
        idx = np.asarray(indices, dtype=int)
        active = w[idx] > 0
        excess = int(active.sum()) - cap
        if excess > 0:
            order = np.argsort(w[idx], kind="stable")  # zero smallest first
            w[idx[order[:len(idx) - cap]]] = 0.0
    return w


def sample_dataset(rig: BlendshapeRig, config: SampleConfig,
                   mesh=None, camera=None, texture=None):
    """Draw (params, image) training pairs for the synthetic domain.

    Control weights are uniform in [0,1] with per-region activation caps
    enforced by zeroing the smallest excess weights; pose comes from a
    truncated Gaussian over the configured ranges.  Images are rendered
    when a mesh and camera are supplied, else the image list is None.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_samples
    pitches = _truncated_normal(rng, *config.pitch_range, size=n)
    yaws = _truncated_normal(rng, *config.yaw_range, size=n)
    params = []
    for i in range(n):
        w = _apply_caps(rng.uniform(0.0, 1.0, rig.n_shapes), config.region_caps)
        params.append(PoseParams(pitch=float(pitches[i]), yaw=float(yaws[i]), w=w))

    images = None
    if mesh is not None and camera is not None:
        from .render import rasterize
        images = [rasterize(mesh, camera, texture=texture, rig=rig, params=p,
                            shaded=False).image for p in params]
    return params, images


# ---------------------------------------------------------------------------
# Latent-space dataset contraction / expansion
# ---------------------------------------------------------------------------

def _knn_scores(points: np.ndarray, reference: np.ndarray, k_nn: int) -> np.ndarray:
    """Distance from each point to its k_nn-th nearest reference point."""
    k = min(k_nn, len(reference))
    dist, _ = cKDTree(reference).query(points, k=k)
    dist = np.atleast_2d(dist.reshape(len(points), -1))
    return dist[:, -1]


def contract(synthetic: np.ndarray, real: np.ndarray,
             prune_fraction: float = 0.2, k_nn: int = 5,
             source_ids=None):
    """Prune the synthetic points farthest from the real distribution.

    Outlier score = distance to the k_nn-th nearest real embedding; the
    ceil(prune_fraction * N) highest-scoring points are removed, breaking
    score ties toward the lower source id.  Returns (kept_indices,
    pruned_indices), a partition of range(N) in ascending order.
    """
    synthetic = np.asarray(synthetic, dtype=float)
    real = np.asarray(real, dtype=float)
    if len(synthetic) == 0 or len(real) == 0:
        raise ValueError("both datasets must be non-empty")
    if not 0.0 <= prune_fraction <= 1.0:
        raise ValueError("prune_fraction must be in [0, 1]")
    n = len(synthetic)
    ids = np.arange(n) if source_ids is None else np.asarray(source_ids)
    scores = _knn_scores(synthetic, real, k_nn)
    n_prune = math.ceil(prune_fraction * n) if prune_fraction > 0 else 0
    order = sorted(range(n), key=lambda i: (-scores[i], ids[i]))
    pruned = np.array(sorted(order[:n_prune]), dtype=int)
    kept = np.array(sorted(order[n_prune:]), dtype=int)
    return kept, pruned


def real_outliers(real: np.ndarray, synthetic: np.ndarray,
                  fraction: float = 0.2, k_nn: int = 5,
                  source_ids=None) -> np.ndarray:
    """Flag the real points farthest from the synthetic distribution
    (the coverage "gaps" that expansion should fill)."""
    _, flagged = contract(real, synthetic, prune_fraction=fraction,
                          k_nn=k_nn, source_ids=source_ids)
    return flagged


def expand(real_outlier_embeddings, bootstrap_params, n_target: int,
           jitter_range=(0.8, 1.2), seed: int = 0):
    """Grow a control-weight dataset from solver-bootstrapped seeds.

    real_outlier_embeddings documents which coverage gaps the bootstrap
    parameters answer; generation itself draws on bootstrap_params only.
    New samples alternate between diagonal jitters (entries uniform in
    jitter_range, clamped to [0,1]) and pairwise interpolations with
    alpha uniform in (0,1).

    Returns (params (n_target, n) array, provenance list).  Provenance
    entries are ("bootstrap", i), ("jitter", base_index, diag) or
    ("interp", i, j, alpha), enough to recompute each row exactly.
    """
    base = [np.asarray(w, dtype=float) for w in bootstrap_params]
    if not base:
        raise ValueError("bootstrap_params must be non-empty")
    if n_target < len(base):
        raise ValueError("n_target smaller than the bootstrap set")
    lo, hi = jitter_range
    rng = np.random.default_rng(seed)
    out = list(base)
    provenance = [("bootstrap", i) for i in range(len(base))]
    n_dim = len(base[0])
    while len(out) < n_target:
        if rng.random() < 0.5 or len(base) < 2:
            i = int(rng.integers(len(base)))
            diag = rng.uniform(lo, hi, n_dim)
            out.append(np.clip(diag * base[i], 0.0, 1.0))
            provenance.append(("jitter", i, diag))
        else:
            i, j = rng.choice(len(base), size=2, replace=False)
            alpha = float(rng.uniform(0.0, 1.0))
            if alpha == 0.0:  # open interval
                alpha = 0.5
            out.append(alpha * base[i] + (1.0 - alpha) * base[j])
            provenance.append(("interp", int(i), int(j), alpha))
    return np.stack(out), provenance
