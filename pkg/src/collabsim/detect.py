"""Box decoding from feature maps and AP evaluation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .gridcore import FeatureMap
from .world import SEMANTIC_CHANNELS, WorldObject


@dataclass(frozen=True)
class Detection:
    confidence: float
    x: float
    y: float
    h: float  # extent along the heading
    w: float
    cos_a: float
    sin_a: float
    cell: int = -1  # flat index of the cell that produced it

    def aabb(self) -> tuple[float, float, float, float]:
        return rotated_aabb(self.x, self.y, self.h, self.w, self.cos_a, self.sin_a)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def rotated_aabb(x, y, length, width, cos_a, sin_a):
    norm = math.hypot(cos_a, sin_a)
    c, s = (cos_a / norm, sin_a / norm) if norm > 0 else (1.0, 0.0)
    ex = abs(c) * length / 2 + abs(s) * width / 2
    ey = abs(s) * length / 2 + abs(c) * width / 2
    return (x - ex, y - ey, x + ex, y + ey)


def object_aabb(o: WorldObject):
    return rotated_aabb(o.x, o.y, o.length, o.width, math.cos(o.yaw), math.sin(o.yaw))


def iou(a, b) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def local_maxima(score: np.ndarray) -> np.ndarray:
    """Cells that are the maximum of their 3x3 window.

    On plateaus only the cell with the smallest flat index survives: a cell
    must strictly beat neighbors that precede it in row-major order.
    """
    h, w = score.shape
    p = np.pad(score, 1, constant_values=-np.inf)
    keep = np.ones((h, w), dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            nb = p[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
            earlier = dr < 0 or (dr == 0 and dc < 0)
            keep &= (score > nb) if earlier else (score >= nb)
    return keep


def decode(f: FeatureMap, threshold: float = 0.5) -> list[Detection]:
    if threshold < 0:
        raise ConfigError(f"detection threshold must be >= 0, got {threshold}")
    v = f.values
    if v.shape[2] < SEMANTIC_CHANNELS:
        raise ConfigError(f"decoder needs D >= {SEMANTIC_CHANNELS}, got {v.shape[2]}")
    conf = v[..., 0]
    cand = (conf > threshold) & local_maxima(conf)
    cs = f.cell_size
    width = v.shape[1]
    dets = []
    for r, c in zip(*np.nonzero(cand)):
        ch = v[r, c]
        e = ch[0]
        off_x, off_y, log_h, log_w = ch[1:5] / e
        cos_a, sin_a = ch[5], ch[6]
        norm = math.hypot(cos_a, sin_a)
        cos_a, sin_a = (cos_a / norm, sin_a / norm) if norm > 0 else (1.0, 0.0)
        dets.append(
            Detection(
                confidence=float(min(e, 1.0)),
                x=(c + 0.5) * cs + float(off_x),
                y=(r + 0.5) * cs + float(off_y),
                h=math.exp(float(log_h)),
                w=math.exp(float(log_w)),
                cos_a=float(cos_a),
                sin_a=float(sin_a),
                cell=int(r * width + c),
            )
        )
    return dets


@dataclass
class EvalResult:
    ap50: float
    ap70: float
    precision: float  # at IoU 0.5 over all detections
    recall: float
    matches: list[tuple[int, int]] = field(default_factory=list)  # (detection, gt) at IoU 0.5


def match(dets, gt, threshold: float):
    """Greedy matching in descending confidence; returns (tp flags, ranked order, pairs)."""
    order = sorted(range(len(dets)), key=lambda k: -dets[k].confidence)
    gt_boxes = [object_aabb(o) for o in gt]
    taken = [False] * len(gt)
    tp = []
    pairs = []
    for k in order:
        box = dets[k].aabb()
        best, best_iou = -1, threshold
        for g, gb in enumerate(gt_boxes):
            if taken[g]:
                continue
            o = iou(box, gb)
            if o >= best_iou and (best < 0 or o > best_iou):
                best, best_iou = g, o
        if best >= 0:
            taken[best] = True
            pairs.append((k, best))
        tp.append(best >= 0)
    return np.asarray(tp, dtype=bool), order, pairs


def average_precision(tp: np.ndarray, num_gt: int) -> float:
    """All-point interpolated area under the precision/recall curve."""
    if num_gt == 0:
        return 1.0 if tp.size == 0 else 0.0
    if tp.size == 0:
        return 0.0
    ctp = np.cumsum(tp)
    recall = ctp / num_gt
    precision = ctp / np.arange(1, tp.size + 1)
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def evaluate(dets, gt, iou_thresholds=(0.5, 0.7)) -> EvalResult:
    gt = list(gt)
    aps = {}
    for thr in iou_thresholds:
        tp, _, _ = match(dets, gt, thr)
        aps[thr] = average_precision(tp, len(gt))
    tp, _, pairs = match(dets, gt, 0.5)
    n_tp = int(tp.sum())
    return EvalResult(
        ap50=aps.get(0.5, float("nan")),
        ap70=aps.get(0.7, float("nan")),
        precision=n_tp / len(dets) if dets else 1.0,
        recall=n_tp / len(gt) if gt else 1.0,
        matches=pairs,
    )
