"""Correlating predicted scores with subjective ratings.

SRCC is Pearson correlation of average ranks. PLCC is Pearson correlation
after mapping predictions through a fitted four-parameter logistic

    f(x) = b1 + (b2 - b1) / (1 + exp(-(x - b3) / |b4|))

which is monotone by construction. The harness scores every stimulus of a
manifest with the base and crack-weighted variants of each metric and reports
both correlations per variant.
"""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import (
    FitError,
    MeshCrackError,
    ParameterError,
    UndefinedCorrelationError,
)
from .frames import list_sequence
from .integration import DEFAULT_BG_TOL, DEFAULT_C2, DEFAULT_STRIDE, score_sequence
from .pcd import PcdConfig
from .qa_models import get_metric

logger = logging.getLogger(__name__)

MANIFEST_FIELDS = ("stimulus_id", "ref_dir", "dist_dir", "mos")

FIT_MAX_ITER = 10000
FIT_REL_TOL = 1e-10


# -- correlations -----------------------------------------------------------


def _vectors(pred, mos, min_len):
    p = np.asarray(pred, dtype=np.float64).ravel()
    m = np.asarray(mos, dtype=np.float64).ravel()
    if p.shape != m.shape:
        raise ParameterError(f"length mismatch: {p.size} predictions, {m.size} ratings")
    if p.size < min_len:
        raise ParameterError(f"need at least {min_len} samples, got {p.size}")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(m))):
        raise ParameterError("inputs must be finite")
    return p, m


def pearson(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da = a - a.mean()
    db = b - b.mean()
    saa = np.dot(da, da)
    sbb = np.dot(db, db)
    if saa == 0 or sbb == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant vector")
    r = np.dot(da, db) / math.sqrt(saa * sbb)
    return float(min(1.0, max(-1.0, r)))


def srcc(pred, mos):
    """Spearman rank-order correlation with average ranks for ties."""
    p, m = _vectors(pred, mos, 3)
    return pearson(stats.rankdata(p), stats.rankdata(m))


@dataclass(frozen=True)
class LogisticParams:
    b1: float
    b2: float
    b3: float
    b4: float
    objective: float = float("nan")

    def __call__(self, x):
        return logistic(np.asarray(x, dtype=np.float64), self.b1, self.b2, self.b3, self.b4)

    def as_tuple(self):
        return self.b1, self.b2, self.b3, self.b4


def logistic(x, b1, b2, b3, b4):
    with np.errstate(over="ignore"):
        return _logistic(x, b1, b2, b3, b4)


def _logistic(x, b1, b2, b3, b4):
    scale = max(abs(b4), _TINY)
    return b1 + (b2 - b1) / (1.0 + np.exp(-(x - b3) / scale))


_TINY = np.finfo(float).tiny


def _sse(beta, x, y):
    r = _logistic(x, beta[0], beta[1], beta[2], beta[3]) - y
    v = float(np.dot(r, r))
    return v if math.isfinite(v) else math.inf


def _nelder_mead(x, y, start):
    """Downhill simplex on the squared-error objective.

    Stops when the objective spread across the simplex falls below
    ``FIT_REL_TOL`` relative to the best vertex, when the best objective is
    zero to rounding, or after ``FIT_MAX_ITER`` iterations.
    """
    n = len(start)
    sim = np.tile(np.asarray(start, dtype=np.float64), (n + 1, 1))
    for i in range(n):
        v = sim[i + 1, i]
        sim[i + 1, i] = v * 1.05 if v != 0 else 0.00025
    fv = np.array([_sse(v, x, y) for v in sim])
    floor = 1e-24 * max(float(np.dot(y - y.mean(), y - y.mean())), 1.0)

    for _ in range(FIT_MAX_ITER):
        order = np.argsort(fv, kind="stable")
        sim, fv = sim[order], fv[order]
        best, worst = fv[0], fv[-1]
        if best <= floor or worst - best <= FIT_REL_TOL * abs(best):
            break
        centroid = sim[:-1].mean(axis=0)
        xr = 2.0 * centroid - sim[-1]
        fr = _sse(xr, x, y)
        if fr < best:
            xe = 3.0 * centroid - 2.0 * sim[-1]
            fe = _sse(xe, x, y)
            if fe < fr:
                sim[-1], fv[-1] = xe, fe
            else:
                sim[-1], fv[-1] = xr, fr
        elif fr < fv[-2]:
            sim[-1], fv[-1] = xr, fr
        else:
            if fr < worst:
                xc = 0.5 * (centroid + xr)
            else:
                xc = 0.5 * (centroid + sim[-1])
            fc = _sse(xc, x, y)
            if fc < min(fr, worst):
                sim[-1], fv[-1] = xc, fc
            else:
                sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
                for i in range(1, n + 1):
                    fv[i] = _sse(sim[i], x, y)
    i = int(np.argmin(fv))
    return sim[i], float(fv[i])


def logistic_fit(pred, mos):
    """Least-squares fit of the monotone logistic mapping predictions to MOS.

    Starts from ``b1 = max(mos)``, ``b2 = min(mos)``, ``b3 = median(pred)``,
    ``b4 = std(pred)``, and also from the same start with ``b1``/``b2``
    swapped, keeping the better of the two. The returned objective never
    exceeds the objective at the initial guess.
    """
    x, y = _vectors(pred, mos, 4)
    init = (float(y.max()), float(y.min()), float(np.median(x)), float(x.std()))
    if init[3] == 0:
        raise FitError("predictions are constant", fallback=LogisticParams(*init))
    with np.errstate(over="ignore"):
        f0 = _sse(init, x, y)
    best_beta, best_f = np.asarray(init), f0
    for start in (init, (init[1], init[0], init[2], init[3])):
        with np.errstate(over="ignore"):
            beta, f = _nelder_mead(x, y, start)
        if f < best_f:
            best_beta, best_f = beta, f
    if not (math.isfinite(best_f) and np.all(np.isfinite(best_beta))) or best_beta[3] == 0:
        raise FitError("logistic fit diverged", fallback=LogisticParams(*init, objective=f0))
    return LogisticParams(*map(float, best_beta), objective=best_f)


def plcc(pred, mos, params=None):
    """Pearson correlation between logistic-mapped predictions and MOS.

    Because the logistic's amplitude is free, the fitted mapping is oriented
    with the ratings and the result is nonnegative in practice.
    """
    x, y = _vectors(pred, mos, 4)
    params = params or logistic_fit(x, y)
    return pearson(params(x), y)


# -- manifest ---------------------------------------------------------------


@dataclass(frozen=True)
class Stimulus:
    stimulus_id: str
    ref_dir: Path
    dist_dir: Path
    mos: float


def read_manifest(path):
    """Parse a ``stimulus_id,ref_dir,dist_dir,mos`` CSV manifest.

    Relative directories resolve against the manifest's folder. Quoted
    fields containing commas are rejected.
    """
    path = Path(path)
    base = path.parent
    records = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_FIELDS:
            raise ParameterError(f"{path}: header must be {','.join(MANIFEST_FIELDS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4 or any("," in c for c in row):
                raise ParameterError(f"{path}:{lineno}: expected 4 unquoted comma-free fields")
            sid, ref, dist, mos = (c.strip() for c in row)
            if sid in seen:
                raise ParameterError(f"{path}:{lineno}: duplicate stimulus_id {sid!r}")
            try:
                mos_value = float(mos)
            except ValueError:
                raise ParameterError(f"{path}:{lineno}: bad mos {mos!r}") from None
            if not math.isfinite(mos_value):
                raise ParameterError(f"{path}:{lineno}: mos must be finite")
            seen.add(sid)
            records.append(Stimulus(sid, base / ref, base / dist, mos_value))
    return records


# -- evaluation -------------------------------------------------------------


@dataclass
class EvalRow:
    metric: str
    variant: str
    srcc: float = None
    plcc: float = None
    fit: dict = None
    n: int = 0
    error: str = None


@dataclass
class EvalReport:
    rows: list
    n_stimuli: int
    skipped: list = field(default_factory=list)
    scores: list = field(default_factory=list)

    def to_dict(self):
        return {
            "n_stimuli": self.n_stimuli,
            "skipped": list(self.skipped),
            "rows": [asdict(r) for r in self.rows],
            "scores": self.scores,
        }

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["metric", "variant", "r_s", "r_p", "n"])
            for r in self.rows:
                w.writerow([
                    r.metric, r.variant,
                    "" if r.srcc is None else f"{r.srcc:.6f}",
                    "" if r.plcc is None else f"{r.plcc:.6f}",
                    r.n,
                ])

    def failed(self):
        return any(r.error for r in self.rows)


def _correlate(metric, variant, pred, mos):
    row = EvalRow(metric, variant, n=len(pred))
    try:
        row.srcc = srcc(pred, mos)
        params = logistic_fit(pred, mos)
        row.fit = {k: getattr(params, k) for k in ("b1", "b2", "b3", "b4")}
        row.plcc = plcc(pred, mos, params)
    except (MeshCrackError, ValueError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        logger.warning("%s/%s: %s", metric, variant, row.error)
    return row


def evaluate(manifest, metrics=("ssim", "lumapsnr"), cfg=None, stride=DEFAULT_STRIDE,
             c2=DEFAULT_C2, bg=None, tol=DEFAULT_BG_TOL, threads=1, crop_to_object=True):
    """Score every stimulus and correlate base/enhanced predictions with MOS.

    Stimuli that cannot be read or scored are skipped and logged; each row
    carries the number of stimuli actually used. A ``cas`` row reports the
    standalone crack artifact score.
    """
    if isinstance(manifest, (str, Path)):
        manifest = read_manifest(manifest)
    cfg = cfg or PcdConfig()
    names = [get_metric(m).name for m in metrics]
    kept, skipped, scores = [], [], []
    for stim in manifest:
        try:
            seq = score_sequence(
                list_sequence(stim.ref_dir), list_sequence(stim.dist_dir), names,
                cfg, c2, bg, tol, stride, threads, crop_to_object,
            )
        except (OSError, MeshCrackError) as exc:
            logger.warning("skipping %s: %s", stim.stimulus_id, exc)
            skipped.append(stim.stimulus_id)
            continue
        kept.append(stim)
        scores.append({
            "stimulus_id": stim.stimulus_id,
            "mos": stim.mos,
            "frames": seq.n_frames,
            "cas": seq.cas,
            "base": seq.base,
            "enhanced": seq.enhanced,
        })
    mos = [s.mos for s in kept]
    rows = []
    for name in names:
        for variant in ("base", "enhanced"):
            rows.append(_correlate(name, variant, [s[variant][name] for s in scores], mos))
    rows.append(_correlate("cas", "base", [s["cas"] for s in scores], mos))
    return EvalReport(rows=rows, n_stimuli=len(kept), skipped=skipped, scores=scores)
