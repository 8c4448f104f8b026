"""Crack-weighted pooling of base quality maps.

Frames are cropped to the rendered object's bounding box, the crack map is
turned into per-pixel weights ``(1 + c2) / (1 - m + c2)``, and a base
model's quality map is pooled as the weighted mean. Per-frame scores are
averaged over a stride-sampled frame sequence.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, EmptyObjectError, ParameterError
from .frames import read_frame
from .imgproc import as_gray_frame, as_real_field, check_same_shape
from .pcd import PcdConfig, compute_crack_map, crack_artifact_score
from .qa_models import QualityMap, get_metric

logger = logging.getLogger(__name__)

DEFAULT_C2 = 1e-4
DEFAULT_BG_TOL = 0.02
DEFAULT_STRIDE = 10


@dataclass(frozen=True)
class CropRect:
    """Pixel rectangle; ``right`` and ``bottom`` are exclusive."""

    left: int
    top: int
    right: int
    bottom: int

    @property
    def width(self):
        return self.right - self.left

    @property
    def height(self):
        return self.bottom - self.top

    def slices(self):
        return slice(self.top, self.bottom), slice(self.left, self.right)

    @classmethod
    def full(cls, shape):
        return cls(0, 0, shape[1], shape[0])


def border_mode(*frames):
    """Most frequent intensity on the 1-pixel border of the given frames."""
    edges = []
    for f in frames:
        edges += [f[0, :], f[-1, :], f[:, 0], f[:, -1]]
    values, counts = np.unique(np.concatenate(edges), return_counts=True)
    # ties go to the smallest intensity (np.unique sorts)
    return float(values[np.argmax(counts)])


def object_bounding_box(ref, dist, bg=None, tol=DEFAULT_BG_TOL):
    """Tight box around pixels differing from the background in either frame.

    ``bg=None`` estimates the background as the modal border intensity of
    both frames. The same rectangle applies to both frames.
    """
    if tol < 0:
        raise ParameterError(f"tol must be nonnegative, got {tol}")
    x = as_gray_frame(ref, "ref")
    y = as_gray_frame(dist, "dist")
    check_same_shape(x, y)
    if bg is None:
        bg = border_mode(x, y)
    fg = (np.abs(x - bg) > tol) | (np.abs(y - bg) > tol)
    rows = np.flatnonzero(fg.any(axis=1))
    if rows.size == 0:
        raise EmptyObjectError(f"no pixel differs from background {bg:.4f} by more than {tol}")
    cols = np.flatnonzero(fg.any(axis=0))
    return CropRect(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)


def crop(frame, rect):
    f = np.asarray(frame)
    if f.ndim < 2:
        raise DimensionError("cannot crop a frame with fewer than 2 dimensions")
    h, w = f.shape[:2]
    if not (0 <= rect.left < rect.right <= w and 0 <= rect.top < rect.bottom <= h):
        raise ParameterError(f"{rect} lies outside a {w}x{h} frame")
    return f[rect.slices()].copy()


def weight_map(crack_map, c2=DEFAULT_C2):
    if not c2 > 0:
        raise ParameterError(f"c2 must be positive, got {c2}")
    m = as_real_field(crack_map, "crack map")
    return (1.0 + c2) / (1.0 - m + c2)


def weighted_pool(qmap, weights):
    """Weighted mean ``sum(w * q) / sum(w)`` of a quality map."""
    q = qmap.data if isinstance(qmap, QualityMap) else qmap
    q = as_real_field(q, "quality map")
    w = as_real_field(weights, "weights")
    check_same_shape(q, w, ("quality map", "weights"))
    total = w.sum()
    if not total > 0:
        raise ParameterError("weights must have a positive sum")
    return float((w * q).sum() / total)


@dataclass
class FrameScores:
    """Scores of one frame pair: the crack artifact score plus base and
    enhanced values per metric."""

    cas: float
    base: dict = field(default_factory=dict)
    enhanced: dict = field(default_factory=dict)


def _prepare(ref, dist, cfg, bg, tol, crop_to_object):
    x = as_gray_frame(ref, "ref")
    y = as_gray_frame(dist, "dist")
    check_same_shape(x, y)
    if crop_to_object:
        rect = object_bounding_box(x, y, bg, tol)
        x, y = crop(x, rect), crop(y, rect)
    return x, y, compute_crack_map(x, y, cfg)


def score_frame(ref, dist, metrics=("ssim",), cfg=None, c2=DEFAULT_C2, bg=None,
                tol=DEFAULT_BG_TOL, crop_to_object=True):
    """Base and crack-weighted scores of one frame pair for several metrics.

    The crack map is computed once on the (cropped) pair and reused.
    Weighting is applied to each map in its native polarity; metrics with a
    conversion step (lumaPSNR) convert after pooling.
    """
    x, y, m = _prepare(ref, dist, cfg or PcdConfig(), bg, tol, crop_to_object)
    w = weight_map(m, c2)
    out = FrameScores(cas=crack_artifact_score(m))
    for name in metrics:
        metric = get_metric(name)
        qmap = metric.quality_map(x, y)
        out.base[metric.name] = metric.score_from_pooled(qmap.mean())
        out.enhanced[metric.name] = metric.score_from_pooled(weighted_pool(qmap, w))
    return out


def enhanced_frame_score(ref, dist, metric="ssim", cfg=None, c2=DEFAULT_C2, bg=None,
                         tol=DEFAULT_BG_TOL, crop_to_object=True):
    name = get_metric(metric).name
    return score_frame(ref, dist, (name,), cfg, c2, bg, tol, crop_to_object).enhanced[name]


def pool_external_map(ref, dist, qmap, cfg=None, c2=DEFAULT_C2, bg=None,
                      tol=DEFAULT_BG_TOL, crop_to_object=True):
    """Base and enhanced pooling of a quality map computed elsewhere.

    ``qmap`` must cover the full, uncropped frame; it is cropped with the
    same rectangle as the frames. Returns ``(base, enhanced)`` in the map's
    native units.
    """
    x = as_gray_frame(ref, "ref")
    y = as_gray_frame(dist, "dist")
    check_same_shape(x, y)
    if qmap.shape != x.shape:
        raise DimensionError(f"quality map shape {qmap.shape} != frame shape {x.shape}")
    rect = object_bounding_box(x, y, bg, tol) if crop_to_object else CropRect.full(x.shape)
    x, y = crop(x, rect), crop(y, rect)
    q = crop(qmap.data, rect)
    w = weight_map(compute_crack_map(x, y, cfg or PcdConfig()), c2)
    return float(q.mean()), weighted_pool(q, w)


def sampled_indices(n, stride=DEFAULT_STRIDE):
    if stride < 1:
        raise ParameterError(f"stride must be >= 1, got {stride}")
    return list(range(0, n, stride))


def sequence_score(pairs, stride, scorer, threads=1):
    """Mean of ``scorer(ref, dist)`` over every ``stride``-th pair."""
    pairs = list(pairs)
    if not pairs:
        raise ParameterError("frame sequence is empty")
    idx = sampled_indices(len(pairs), stride)
    scores = _ordered_map(lambda i: scorer(*pairs[i]), idx, threads)
    return _mean(scores)


def _ordered_map(fn, items, threads):
    if threads is None or threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _mean(values):
    # index-order summation keeps results identical regardless of threads
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


@dataclass
class SequenceScores:
    n_frames: int
    cas: float
    base: dict
    enhanced: dict


def score_sequence(ref_paths, dist_paths, metrics=("ssim",), cfg=None, c2=DEFAULT_C2,
                   bg=None, tol=DEFAULT_BG_TOL, stride=DEFAULT_STRIDE, threads=1,
                   crop_to_object=True):
    """Average frame scores over a stride-sampled pair of frame sequences."""
    if len(ref_paths) != len(dist_paths):
        raise DimensionError(
            f"reference has {len(ref_paths)} frames, distorted has {len(dist_paths)}"
        )
    if not ref_paths:
        raise ParameterError("frame sequence is empty")
    cfg = cfg or PcdConfig()
    idx = sampled_indices(len(ref_paths), stride)

    def one(i):
        fs = score_frame(read_frame(ref_paths[i]), read_frame(dist_paths[i]),
                         metrics, cfg, c2, bg, tol, crop_to_object)
        logger.info("frame %d (%s): cas=%.6f", i, Path(dist_paths[i]).name, fs.cas)
        return fs

    per_frame = _ordered_map(one, idx, threads)
    names = [get_metric(m).name for m in metrics]
    return SequenceScores(
        n_frames=len(per_frame),
        cas=_mean([f.cas for f in per_frame]),
        base={n: _mean([f.base[n] for f in per_frame]) for n in names},
        enhanced={n: _mean([f.enhanced[n] for f in per_frame]) for n in names},
    )
