"""Low-level image primitives.

Frames are 2-D ``float64`` arrays indexed ``[row, col]`` with intensities in
``[0, 1]``. Intermediate maps (local statistics, Laplacian responses, modulated
maps) use the same layout but are not range-limited.

All sliding-window operators are correlations (no kernel flip) with edge
replication at the borders.
"""

import cv2
import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "LUMA_WEIGHTS",
    "LAPLACIAN_KERNEL",
    "as_gray_frame",
    "as_real_field",
    "to_grayscale",
    "gaussian_kernel",
    "convolve_same",
    "local_mean",
    "local_std",
    "laplacian",
]

# Rec. 601 luma
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

LAPLACIAN_KERNEL = np.array(
    [[0.0, 1.0, 0.0],
     [1.0, -4.0, 1.0],
     [0.0, 1.0, 0.0]]
)


def as_gray_frame(frame, name="frame"):
    """Validate and return ``frame`` as a 2-D float64 array in [0, 1]."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} is empty")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise ParameterError(f"{name} intensities must lie in [0, 1]")
    return arr


def as_real_field(field, name="field"):
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} is empty")
    return arr


def check_same_shape(a, b, names=("ref", "dist")):
    if a.shape != b.shape:
        raise DimensionError(
            f"{names[0]} shape {a.shape} does not match {names[1]} shape {b.shape}"
        )


def to_grayscale(r, g=None, b=None):
    """Convert a 3-channel frame to luma.

    Accepts either one ``(H, W, 3)`` array or three ``(H, W)`` channel arrays.
    Channel values must already be in ``[0, 1]``.
    """
    if g is None and b is None:
        rgb = np.asarray(r, dtype=np.float64)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise DimensionError(f"expected an (H, W, 3) array, got {rgb.shape}")
        r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    elif g is None or b is None:
        raise DimensionError("need either one RGB array or three channels")
    r, g, b = (np.asarray(c, dtype=np.float64) for c in (r, g, b))
    if not (r.shape == g.shape == b.shape):
        raise DimensionError(
            f"channel shapes differ: {r.shape}, {g.shape}, {b.shape}"
        )
    wr, wg, wb = LUMA_WEIGHTS
    y = wr * r + wg * g + wb * b
    # weights sum to 1 but rounding can overshoot by an ulp
    return np.clip(y, 0.0, 1.0)


def gaussian_kernel(size=5, sigma=1.5):
    """Normalized ``size x size`` Gaussian window centred on the middle tap."""
    if int(size) != size or size < 1 or size % 2 == 0:
        raise ParameterError(f"kernel size must be a positive odd integer, got {size}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    size = int(size)
    c = (size - 1) / 2.0
    ax = np.arange(size, dtype=np.float64) - c
    g = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma**2))
    return g / g.sum()


def _separable_factors(kernel):
    """Return ``(col, row)`` 1-D factors if ``kernel`` is an outer product."""
    k = kernel
    # Gaussian and box kernels are outer products of their central row/column
    c = k.shape[0] // 2
    centre = k[c, c]
    if centre == 0:
        return None
    col = k[:, c]
    row = k[c, :] / centre
    if np.allclose(np.outer(col, row), k, rtol=0, atol=1e-15):
        return col, row
    return None


def convolve_same(frame, kernel):
    """Correlate ``frame`` with ``kernel`` using edge replication.

    Output has the input's shape. The kernel is applied without flipping.
    """
    f = as_real_field(frame)
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
        raise ParameterError(f"kernel must be square with odd size, got {k.shape}")
    if k.shape[0] > 2 * min(f.shape) + 1:
        raise ParameterError(
            f"kernel size {k.shape[0]} too large for a {f.shape[1]}x{f.shape[0]} frame"
        )
    f = np.ascontiguousarray(f)
    factors = _separable_factors(k)
    if factors is not None:
        col, row = factors
        return cv2.sepFilter2D(f, cv2.CV_64F, row, col, borderType=cv2.BORDER_REPLICATE)
    # filter2D correlates (no flip) with the anchor at the kernel centre
    return cv2.filter2D(f, cv2.CV_64F, k, borderType=cv2.BORDER_REPLICATE)


def local_mean(frame, gkernel):
    return convolve_same(frame, gkernel)


def local_std(frame, gkernel):
    """Gaussian-weighted local standard deviation.

    Computed as ``sqrt(max(0, E[x^2] - E[x]^2))``; the clamp absorbs small
    negative residues from cancellation.
    """
    f = as_real_field(frame)
    # variance is shift invariant; shifting by a pixel value makes flat
    # frames exactly zero and reduces cancellation elsewhere
    f = f - f.flat[0]
    mu = convolve_same(f, gkernel)
    ex2 = convolve_same(f * f, gkernel)
    return np.sqrt(np.maximum(ex2 - mu * mu, 0.0))


def laplacian(frame):
    """Signed 4-neighbour Laplacian response with edge replication."""
    return convolve_same(frame, LAPLACIAN_KERNEL)
