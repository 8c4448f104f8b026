"""Full-reference base quality models that produce per-pixel quality maps.

Each map carries a polarity so that pooling and binarization know which
direction is worse. Also provides the threshold-binarized baseline crack
detectors and the ``QMAP`` raster format for exchanging externally computed
maps.
"""

import enum
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, ParameterError
from .imgproc import (
    as_gray_frame,
    as_real_field,
    check_same_shape,
    convolve_same,
    gaussian_kernel,
)

__all__ = [
    "Polarity",
    "QualityMap",
    "ssim_map",
    "ssim_index",
    "squared_error_map",
    "psnr_from_pooled_mse",
    "gms_map",
    "gmsd_score",
    "binarize_map",
    "read_qmap",
    "write_qmap",
    "METRICS",
    "get_metric",
]

PSNR_CAP_DB = 100.0

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5

# 170 on the 8-bit scale, rescaled to unit dynamic range
GMS_C = 170.0 / 255.0**2

PREWITT_X = np.array(
    [[1.0, 0.0, -1.0],
     [1.0, 0.0, -1.0],
     [1.0, 0.0, -1.0]]
) / 3.0
PREWITT_Y = PREWITT_X.T.copy()


class Polarity(enum.IntEnum):
    HIGHER_IS_BETTER = 0
    HIGHER_IS_WORSE = 1


@dataclass
class QualityMap:
    data: np.ndarray
    polarity: Polarity

    @property
    def shape(self):
        return self.data.shape

    def mean(self):
        return float(self.data.mean())


def ssim_map(ref, dist, data_range=1.0):
    """Per-pixel SSIM with an 11x11 Gaussian window (sigma 1.5).

    Local statistics use edge replication, so the map has the input's shape.
    """
    x = as_gray_frame(ref, "ref")
    y = as_gray_frame(dist, "dist")
    check_same_shape(x, y)
    if min(x.shape) < SSIM_WINDOW:
        raise ParameterError(
            f"SSIM needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got "
            f"{x.shape[1]}x{x.shape[0]}"
        )
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    w = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    mu_x = convolve_same(x, w)
    mu_y = convolve_same(y, w)
    sxx = convolve_same(x * x, w) - mu_x * mu_x
    syy = convolve_same(y * y, w) - mu_y * mu_y
    sxy = convolve_same(x * y, w) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return QualityMap(np.clip(num / den, -1.0, 1.0), Polarity.HIGHER_IS_BETTER)


def ssim_index(ref, dist):
    return ssim_map(ref, dist).mean()


def squared_error_map(ref, dist):
    x = as_gray_frame(ref, "ref")
    y = as_gray_frame(dist, "dist")
    check_same_shape(x, y)
    return QualityMap((x - y) ** 2, Polarity.HIGHER_IS_WORSE)


def psnr_from_pooled_mse(mse):
    """PSNR in dB for unit peak; a zero error is reported as 100 dB."""
    if mse < 0 or math.isnan(mse):
        raise ParameterError(f"mse must be nonnegative, got {mse}")
    if mse == 0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP_DB)


def gradient_magnitude(frame):
    gx = convolve_same(frame, PREWITT_X)
    gy = convolve_same(frame, PREWITT_Y)
    return np.sqrt(gx * gx + gy * gy)


def gms_map(ref, dist, c=GMS_C):
    """Gradient magnitude similarity from Prewitt gradients, in ``(0, 1]``."""
    x = as_gray_frame(ref, "ref")
    y = as_gray_frame(dist, "dist")
    check_same_shape(x, y)
    if min(x.shape) < 3:
        raise ParameterError("GMS needs frames of at least 3x3")
    gr = gradient_magnitude(x)
    gd = gradient_magnitude(y)
    gms = (2.0 * gr * gd + c) / (gr * gr + gd * gd + c)
    return QualityMap(np.minimum(gms, 1.0), Polarity.HIGHER_IS_BETTER)


def gmsd_score(ref, dist):
    """Standard deviation of the GMS map; higher is worse."""
    return float(gms_map(ref, dist).data.std())


def binarize_map(qmap, threshold):
    """Flag pixels on the bad side of ``threshold``.

    Higher-is-worse maps flag ``q > threshold``; higher-is-better maps flag
    ``q < threshold``.
    """
    data = np.asarray(qmap.data, dtype=np.float64)
    if qmap.polarity == Polarity.HIGHER_IS_WORSE:
        return data > threshold
    return data < threshold


# -- QMAP raster ------------------------------------------------------------
# 16-byte little-endian header: b"QMAP", uint32 width, uint32 height,
# uint8 polarity, 3 pad bytes; then float32 samples in row-major order.

_QMAP_MAGIC = b"QMAP"
_QMAP_HEADER = struct.Struct("<4sIIB3x")


def write_qmap(path, qmap):
    data = as_real_field(qmap.data, "quality map")
    h, w = data.shape
    header = _QMAP_HEADER.pack(_QMAP_MAGIC, w, h, int(qmap.polarity))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.astype("<f4").tobytes())


def read_qmap(path):
    raw = Path(path).read_bytes()
    if len(raw) < _QMAP_HEADER.size:
        raise OSError(f"{path}: truncated QMAP header")
    magic, w, h, pol = _QMAP_HEADER.unpack_from(raw)
    if magic != _QMAP_MAGIC:
        raise OSError(f"{path}: not a QMAP file")
    if w < 1 or h < 1:
        raise OSError(f"{path}: invalid dimensions {w}x{h}")
    try:
        polarity = Polarity(pol)
    except ValueError:
        raise OSError(f"{path}: unknown polarity byte {pol}") from None
    expected = _QMAP_HEADER.size + 4 * w * h
    if len(raw) != expected:
        raise OSError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=_QMAP_HEADER.size)
    data = data.reshape(h, w).astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise OSError(f"{path}: non-finite samples")
    return QualityMap(data, polarity)


# -- metric registry --------------------------------------------------------


@dataclass(frozen=True)
class Metric:
    """A base model that maps a frame pair to a quality map, plus the
    conversion applied to the pooled map value to obtain the frame score."""

    name: str
    quality_map: object
    finalize: object = None

    def score_from_pooled(self, pooled):
        return self.finalize(pooled) if self.finalize else float(pooled)


METRICS = {
    "ssim": Metric("ssim", ssim_map),
    "lumapsnr": Metric("lumapsnr", squared_error_map, psnr_from_pooled_mse),
    "gms": Metric("gms", gms_map),
}


def get_metric(name):
    try:
        return METRICS[name.lower()]
    except KeyError:
        raise ParameterError(
            f"unknown metric {name!r}; choose from {', '.join(METRICS)}"
        ) from None


def check_map_shape(qmap, shape):
    if qmap.shape != tuple(shape):
        raise DimensionError(f"quality map shape {qmap.shape} != frame shape {tuple(shape)}")
