"""Small raster utilities shared by features, render, and transfer.

Images are numpy arrays, (H, W, 3) float RGB in [0, 1]; single-channel
arrays are (H, W).
"""

from __future__ import annotations

import numpy as np


def _axis_weights(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic (n_out, n_in) matrix of box-filter overlap weights."""
    s = n_in / n_out
    w = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo, hi = i * s, (i + 1) * s
        j0 = int(np.floor(lo))
        j1 = min(int(np.ceil(hi)), n_in)
        for j in range(j0, j1):
            w[i, j] = (min(hi, j + 1) - max(lo, j)) / s
    return w


def box_resample(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Exact area-average resampling to (out_h, out_w).

    Each output cell is the mean of the input pixels it covers, with
    fractional pixels weighted by overlap area.
    """
    img = np.asarray(img, dtype=float)
    wr = _axis_weights(img.shape[0], out_h)
    wc = _axis_weights(img.shape[1], out_w)
    if img.ndim == 2:
        return wr @ img @ wc.T
    return np.einsum("ij,jkc,lk->ilc", wr, img, wc)


def bilinear_sample(tex: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Sample a texture at continuous UV coordinates in [0,1]^2.

    Texel centers sit at ((j + 0.5) / W, (i + 0.5) / H); v runs down the
    texture rows.  Coordinates are clamped to the texel-center range, so
    queries never wrap.

    tex: (H, W) or (H, W, C); uv: (..., 2).  Returns (...,) or (..., C).
    """
    tex = np.asarray(tex, dtype=float)
    uv = np.asarray(uv, dtype=float)
    h, w = tex.shape[:2]
    x = np.clip(uv[..., 0] * w - 0.5, 0.0, w - 1.0)
    y = np.clip(uv[..., 1] * h - 0.5, 0.0, h - 1.0)
    x0 = np.clip(np.floor(x).astype(int), 0, w - 2) if w > 1 else np.zeros_like(x, int)
    y0 = np.clip(np.floor(y).astype(int), 0, h - 2) if h > 1 else np.zeros_like(y, int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[..., None] if tex.ndim == 3 else (x - x0)
    fy = (y - y0)[..., None] if tex.ndim == 3 else (y - y0)
    c00 = tex[y0, x0]
    c01 = tex[y0, x1]
    c10 = tex[y1, x0]
    c11 = tex[y1, x1]
    top = c00 * (1 - fx) + c01 * fx
    bot = c10 * (1 - fx) + c11 * fx
    return top * (1 - fy) + bot * fy


def bilinear_sample_grad(tex: np.ndarray, uv: np.ndarray):
    """Derivative of bilinear_sample w.r.t. u and v.

    Returns (d_du, d_dv), each shaped like the sample output.  Piecewise
    constant between texel centers; zero where coordinates clamp.
    """
    tex = np.asarray(tex, dtype=float)
    uv = np.asarray(uv, dtype=float)
    h, w = tex.shape[:2]
    xr = uv[..., 0] * w - 0.5
    yr = uv[..., 1] * h - 0.5
    inside_x = (xr > 0.0) & (xr < w - 1.0)
    inside_y = (yr > 0.0) & (yr < h - 1.0)
    x = np.clip(xr, 0.0, w - 1.0)
    y = np.clip(yr, 0.0, h - 1.0)
    x0 = np.clip(np.floor(x).astype(int), 0, w - 2) if w > 1 else np.zeros_like(x, int)
    y0 = np.clip(np.floor(y).astype(int), 0, h - 2) if h > 1 else np.zeros_like(y, int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    c00, c01 = tex[y0, x0], tex[y0, x1]
    c10, c11 = tex[y1, x0], tex[y1, x1]
    if tex.ndim == 3:
        fx, fy = fx[..., None], fy[..., None]
        inside_x = inside_x[..., None]
        inside_y = inside_y[..., None]
    # d/dx of the interpolant, then chain through x = u * w - 0.5.
    d_dx = (c01 - c00) * (1 - fy) + (c11 - c10) * fy
    d_dy = (c10 - c00) * (1 - fx) + (c11 - c01) * fx
    d_du = np.where(inside_x, d_dx, 0.0) * w
    d_dv = np.where(inside_y, d_dy, 0.0) * h
    return d_du, d_dv


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Clamp a float image to [0,1] and quantize to uint8."""
    return (np.clip(np.asarray(img, dtype=float), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def from_uint8(img: np.ndarray) -> np.ndarray:
    return np.asarray(img, dtype=float) / 255.0
