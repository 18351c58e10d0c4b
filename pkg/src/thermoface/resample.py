"""Bilinear resampling helpers shared by preprocessing, augmentation and synthesis."""
from __future__ import annotations

import numpy as np


def bilinear_sample(img: np.ndarray, yy: np.ndarray, xx: np.ndarray, fill: float) -> np.ndarray:
    """Sample a 2-D image at fractional (yy, xx) coordinates.

    Coordinates outside the image are filled with `fill`. Samples that land
    exactly on integer coordinates reproduce the source pixel bit for bit.
    """
    h, w = img.shape
    y0 = np.floor(yy)
    x0 = np.floor(xx)
    wy = yy - y0
    wx = xx - x0
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)

    def corner(dy, dx):
        ys = y0 + dy
        xs = x0 + dx
        inside = (ys >= 0) & (ys < h) & (xs >= 0) & (xs < w)
        vals = img[np.clip(ys, 0, h - 1), np.clip(xs, 0, w - 1)]
        return np.where(inside, vals, fill)

    top = corner(0, 0) * (1.0 - wx) + corner(0, 1) * wx
    bot = corner(1, 0) * (1.0 - wx) + corner(1, 1) * wx
    return top * (1.0 - wy) + bot * wy


def affine_sample(img: np.ndarray, angle_deg: float, scale: float,
                  shift: tuple[float, float] = (0.0, 0.0), fill: float = 0.0) -> np.ndarray:
    """Rotate by `angle_deg` about the center and rescale by `scale`, bilinear.

    The output grid is mapped back into the source image (inverse warp), so
    angle 0 with scale 1 and no shift is an exact identity.
    """
    h, w = img.shape
    cy = (h - 1) / 2.0
    cx = (w - 1) / 2.0
    theta = np.deg2rad(angle_deg)
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    # inverse map: undo shift, rotation and scale for each output pixel
    dy = ys - cy - shift[0]
    dx = xs - cx - shift[1]
    src_y = (cos_t * dy - sin_t * dx) / scale + cy
    src_x = (sin_t * dy + cos_t * dx) / scale + cx
    return bilinear_sample(img, src_y, src_x, fill)


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize with corner-aligned bilinear sampling; identity when sizes match."""
    h, w = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = np.linspace(0.0, h - 1.0, out_h) if out_h > 1 else np.array([(h - 1) / 2.0])
    xs = np.linspace(0.0, w - 1.0, out_w) if out_w > 1 else np.array([(w - 1) / 2.0])
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return bilinear_sample(img, yy, xx, fill=0.0)
