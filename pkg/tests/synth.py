"""Synthetic render-like fixtures shared by the test modules."""

from pathlib import Path

import cv2
import numpy as np
from scipy import ndimage, optimize

from meshcrack.frames import write_frame

BG = 0.1


def shaded_disc(size=256, radius=100, bg=BG):
    """Lambert-like shaded disc on a uniform background."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = size / 2
    r2 = ((yy - c) ** 2 + (xx - c) ** 2) / radius**2
    inside = r2 < 1
    ref = np.full((size, size), bg)
    tilt = 0.6 + 0.4 * (xx - c + radius) / (2 * radius)
    ref[inside] = 0.25 + 0.6 * np.sqrt(1 - r2[inside]) * tilt[inside]
    return np.clip(ref, 0, 1), r2


def fissure_mask(shape, allowed, rng, count=6, steps=8, step_len=12):
    """Random-walk polylines of width 1 or 2 pixels restricted to ``allowed``."""
    h, w = shape
    mask = np.zeros(shape, np.uint8)
    for k in range(count):
        one = np.zeros(shape, np.uint8)
        a = rng.uniform(0, 2 * np.pi)
        p = np.array([w / 2, h / 2]) + rng.uniform(0, 50) * np.array([np.cos(a), np.sin(a)])
        for _ in range(steps):
            a += rng.normal(0, 0.5)
            q = p + step_len * np.array([np.cos(a), np.sin(a)])
            cv2.line(one, (int(p[0]), int(p[1])), (int(q[0]), int(q[1])), 1, 1)
            p = q
        if k % 2:
            # widen to 2 px by OR-ing a one-pixel horizontal shift
            one[:, 1:] |= one[:, :-1]
        mask |= one
    return (mask > 0) & allowed


def cracked_disc(seed=0, size=256, count=6):
    ref, r2 = shaded_disc(size)
    rng = np.random.default_rng(seed)
    fis = fissure_mask(ref.shape, r2 < 0.85, rng, count=count)
    dist = ref.copy()
    dist[fis] = BG
    return ref, dist, fis


def blur_matched(ref, target_mad):
    """Gaussian blur of ``ref`` whose mean absolute difference equals ``target_mad``."""
    def gap(s):
        return np.abs(ndimage.gaussian_filter(ref, s, mode="nearest") - ref).mean() - target_mad
    s = optimize.brentq(gap, 0.05, 30.0, xtol=1e-6)
    return ndimage.gaussian_filter(ref, s, mode="nearest"), s


def noise_texture(shape, rng, smooth=1.0, lo=0.15, hi=0.85):
    t = ndimage.gaussian_filter(rng.random(shape), smooth, mode="wrap")
    t = (t - t.min()) / (t.max() - t.min())
    return lo + (hi - lo) * t


def stroke_mask(shape, top, left, length=40):
    """A 1-pixel horizontal stroke."""
    m = np.zeros(shape, bool)
    m[top, left:left + length] = True
    return m


def density_family(n=10, size=200):
    """Frame pairs whose only distortion is a growing number of fissures.

    Fissures are identical horizontal segments on separate rows of a gently
    shaded plate, so each added fissure adds the same artifact.
    """
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    plate = np.full((size, size), BG)
    body = (yy >= 20) & (yy < size - 20) & (xx >= 20) & (xx < size - 20)
    plate[body] = 0.5 + 0.15 * (xx[body] - 20) / (size - 40)
    rows = [30 + 14 * i for i in range(n)]
    pairs = []
    for k in range(1, n + 1):
        dist = plate.copy()
        for r in rows[:k]:
            dist[r, 40:160] = BG
        pairs.append((plate, dist))
    return pairs


def write_sequence(directory, frames, bits=8):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, f in enumerate(frames):
        write_frame(directory / f"frame_{i:04d}.png", f, bits=bits)
    return directory


def quantize(frame):
    """Round to the 8-bit grid so written and in-memory frames agree exactly."""
    return np.rint(np.clip(frame, 0, 1) * 255) / 255


def displaced_mosaic(size=200, tile=25, shift=1, seed=5):
    """Texture mixing flat tiles and fine noise, and a copy shifted sideways.

    Models a small texture-coordinate displacement: the difference is spread
    over the whole surface, mostly where the texture is busy.
    """
    rng = np.random.default_rng(seed)
    noise = noise_texture((size, size), rng, smooth=0.7)
    yy, xx = np.mgrid[0:size, 0:size]
    flat = (yy // tile + xx // tile) % 2 == 0
    n = size // tile + 1
    levels = rng.uniform(0.2, 0.8, (n, n))[yy // tile, xx // tile]
    ref = np.where(flat, levels, noise)
    return ref, np.roll(ref, shift, axis=1)
