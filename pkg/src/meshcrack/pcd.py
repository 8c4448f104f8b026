"""Perceptual crack detection.

Given gray reference and distorted renders of the same viewpoint, the
detector produces a crack likelihood map in ``{0} U (0.5, 1]``:

1. truncated absolute difference (small differences zeroed),
2. division by the local contrast of the reference (visual masking),
3. multiplication by the absolute Laplacian of the distorted frame,
4. a sigmoid that is cut to zero at and below the knee ``t1``.

Stages 2 and 3 can be switched off for ablation; a disabled stage passes its
input through unchanged.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError
from .imgproc import (
    as_gray_frame,
    as_real_field,
    check_same_shape,
    gaussian_kernel,
    laplacian,
    local_std,
)

__all__ = [
    "PcdConfig",
    "truncated_abs_diff",
    "contrast_modulate",
    "laplacian_modulate",
    "truncated_sigmoid",
    "initial_crack_map",
    "compute_crack_map",
    "crack_artifact_score",
    "ablation_variants",
    "is_crack_map",
]


@dataclass(frozen=True)
class PcdConfig:
    """Detector constants and ablation switches.

    ``t1`` is not published alongside the method; 2.0 is calibrated on
    synthetic fissure fixtures (see the acceptance tests) and should be
    treated as a tunable.
    """

    tad_threshold: float = 0.1
    c1: float = 0.01
    t1: float = 2.0
    contrast_modulation: bool = True
    laplacian_modulation: bool = True
    window_size: int = 5
    window_sigma: float = 1.5

    def __post_init__(self):
        if not 0.0 <= self.tad_threshold < 1.0:
            raise ParameterError(f"tad_threshold must be in [0, 1), got {self.tad_threshold}")
        if not self.c1 > 0:
            raise ParameterError(f"c1 must be positive, got {self.c1}")
        if not self.t1 > 0:
            raise ParameterError(f"t1 must be positive, got {self.t1}")
        if int(self.window_size) != self.window_size or self.window_size < 1 \
                or self.window_size % 2 == 0:
            raise ParameterError(f"window_size must be odd and >= 1, got {self.window_size}")
        if not self.window_sigma > 0:
            raise ParameterError(f"window_sigma must be positive, got {self.window_sigma}")

    def kernel(self):
        return gaussian_kernel(self.window_size, self.window_sigma)


def truncated_abs_diff(ref, dist, threshold=0.1):
    """``|ref - dist|`` with values strictly below ``threshold`` set to 0."""
    if not 0.0 <= threshold < 1.0:
        raise ParameterError(f"threshold must be in [0, 1), got {threshold}")
    x = as_gray_frame(ref, "ref")
    y = as_gray_frame(dist, "dist")
    check_same_shape(x, y)
    d = np.abs(x - y)
    d *= d >= threshold
    return d


def contrast_modulate(tad, sigma, c1=0.01):
    """Divide the difference map by ``sigma + c1`` (masking by local contrast)."""
    if not c1 > 0:
        raise ParameterError(f"c1 must be positive, got {c1}")
    tad = as_real_field(tad, "tad")
    sigma = as_real_field(sigma, "sigma")
    check_same_shape(tad, sigma, ("tad", "sigma"))
    if np.any(sigma < 0):
        raise ParameterError("sigma must be nonnegative")
    return tad / (sigma + c1)


def laplacian_modulate(mbar, lap):
    mbar = as_real_field(mbar, "mbar")
    lap = as_real_field(lap, "lap")
    check_same_shape(mbar, lap, ("mbar", "lap"))
    return mbar * np.abs(lap)


def truncated_sigmoid(mtilde, t1=2.0):
    """``sigmoid((m - t1) / t1)`` where ``m > t1``, else 0."""
    if not t1 > 0:
        raise ParameterError(f"t1 must be positive, got {t1}")
    m = as_real_field(mtilde, "mtilde")
    if np.any(m < 0):
        raise ParameterError("initial crack map must be nonnegative")
    # m >= 0 bounds the exponent by 1, so evaluating everywhere cannot overflow
    v = np.subtract(m, t1)
    v *= -1.0 / t1
    np.exp(v, out=v)
    v += 1.0
    np.reciprocal(v, out=v)
    # keep the codomain open at 0.5 when the argument is a rounding residue
    np.maximum(v, np.nextafter(0.5, 1.0), out=v)
    v *= m > t1
    return v


def initial_crack_map(ref, dist, cfg=None):
    """The pre-sigmoid map: TAD, optionally contrast- and Laplacian-modulated."""
    cfg = cfg or PcdConfig()
    x = as_gray_frame(ref, "ref")
    y = as_gray_frame(dist, "dist")
    check_same_shape(x, y)
    m = truncated_abs_diff(x, y, cfg.tad_threshold)
    if cfg.contrast_modulation:
        m = contrast_modulate(m, local_std(x, cfg.kernel()), cfg.c1)
    if cfg.laplacian_modulation:
        m = laplacian_modulate(m, laplacian(y))
    return m


def compute_crack_map(ref, dist, cfg=None):
    """Crack likelihood map of a distorted frame against its reference.

    Parameters
    ----------
    ref, dist : array_like
        Gray frames of equal shape with intensities in ``[0, 1]``.
    cfg : PcdConfig, optional
        Detector settings; defaults are used when omitted.

    Returns
    -------
    ndarray
        Map of the input shape; each value is 0 or lies in ``(0.5, 1]``.
    """
    cfg = cfg or PcdConfig()
    return truncated_sigmoid(initial_crack_map(ref, dist, cfg), cfg.t1)


def crack_artifact_score(crack_map):
    """Mean crack likelihood; larger means worse quality."""
    m = np.asarray(crack_map, dtype=np.float64)
    if m.size == 0:
        raise ParameterError("crack map is empty")
    return float(m.mean())


def is_crack_map(m):
    m = np.asarray(m)
    return bool(np.all((m == 0.0) | ((m > 0.5) & (m <= 1.0))))


ABLATION_NAMES = ("full", "no_contrast", "no_laplacian", "neither")


def ablation_variants(cfg=None):
    """The four ablation configurations keyed by name.

    Switching a stage off removes its gain as well, so each variant's knee
    ``t1`` is divided by the nominal gain of the bypassed stage: ``1 / c1``
    for contrast modulation (its gain on a flat region) and 1 for the
    Laplacian stage. This keeps the variants comparable; without it the
    unmodulated difference (at most 1) could never pass the default knee.
    """
    cfg = cfg or PcdConfig()
    contrast_gain = 1.0 / cfg.c1
    laplacian_gain = 1.0
    return {
        "full": replace(cfg, contrast_modulation=True, laplacian_modulation=True),
        "no_contrast": replace(
            cfg, contrast_modulation=False, laplacian_modulation=True,
            t1=cfg.t1 / contrast_gain,
        ),
        "no_laplacian": replace(
            cfg, contrast_modulation=True, laplacian_modulation=False,
            t1=cfg.t1 / laplacian_gain,
        ),
        "neither": replace(
            cfg, contrast_modulation=False, laplacian_modulation=False,
            t1=cfg.t1 / (contrast_gain * laplacian_gain),
        ),
    }
