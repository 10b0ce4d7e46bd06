"""Micro/macro precision, recall and F1 over block test sets.

Micro metrics pool the confusion counts over all classes; since every test
instance receives exactly one prediction, micro precision, recall and F1
all collapse to plain accuracy.  Macro metrics average per-class values over
the classes that actually occur in the test set; classes with zero test
support are left out rather than dragged in as zeros.

Evaluation runs in two modes: ANV predicts each test record once with every
name abbreviated; ALL predicts each record twice (full names, then
abbreviated) and pools both outcomes into a single report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocking import Block
from .encoders import Encoders
from .model import ModelParams
from .predict import predict_author
from .training import MODE_ANV, MODE_FULL, Split, SplitAssignment

EVAL_ALL = "ALL"
EVAL_ANV = "ANV"


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    mode: str
    instance_count: int
    per_class: tuple[ClassMetrics, ...]
    miap: float
    maap: float
    miar: float
    maar: float
    miaf1: float
    maaf1: float


def micro_macro_report(truths, preds, n_classes: int, mode: str = EVAL_ALL) -> EvalReport:
    """Build the report from parallel truth/prediction class lists."""
    truths = np.asarray(truths, dtype=np.int64)
    preds = np.asarray(preds, dtype=np.int64)
    if truths.shape != preds.shape or truths.ndim != 1:
        raise EvaluationError(f"truths and preds must be equal-length 1-D, got {truths.shape} vs {preds.shape}")
    if truths.size and (
        truths.min() < 0 or truths.max() >= n_classes or preds.min() < 0 or preds.max() >= n_classes
    ):
        raise EvaluationError("class out of range")

    tp = np.zeros(n_classes, dtype=np.int64)
    fp = np.zeros(n_classes, dtype=np.int64)
    fn = np.zeros(n_classes, dtype=np.int64)
    support = np.bincount(truths, minlength=n_classes)
    for t, p in zip(truths, preds):
        if t == p:
            tp[t] += 1
        else:
            fp[p] += 1
            fn[t] += 1

    def safe_div(a, b):
        return float(a) / float(b) if b else 0.0

    per_class = []
    for c in range(n_classes):
        precision = safe_div(tp[c], tp[c] + fp[c])
        recall = safe_div(tp[c], tp[c] + fn[c])
        f1 = safe_div(2 * precision * recall, precision + recall) if precision + recall else 0.0
        per_class.append(ClassMetrics(precision, recall, f1, int(support[c])))

    supported = [c for c in range(n_classes) if support[c] > 0]
    if supported:
        maap = float(np.mean([per_class[c].precision for c in supported]))
        maar = float(np.mean([per_class[c].recall for c in supported]))
        maaf1 = float(np.mean([per_class[c].f1 for c in supported]))
    else:
        maap = maar = maaf1 = 0.0

    micro_tp, micro_fp, micro_fn = int(tp.sum()), int(fp.sum()), int(fn.sum())
    miap = safe_div(micro_tp, micro_tp + micro_fp)
    miar = safe_div(micro_tp, micro_tp + micro_fn)
    miaf1 = safe_div(2 * miap * miar, miap + miar) if miap + miar else 0.0

    return EvalReport(
        mode=mode,
        instance_count=int(truths.size),
        per_class=tuple(per_class),
        miap=miap,
        maap=maap,
        miar=miar,
        maar=maar,
        miaf1=miaf1,
        maaf1=maaf1,
    )


def evaluate_block(
    params: ModelParams,
    block: Block,
    split: SplitAssignment,
    mode: str,
    encoders: Encoders,
    aggregation: str = "sum",
) -> EvalReport:
    """Predict every TEST entry of the block and score the outcome."""
    if mode not in (EVAL_ALL, EVAL_ANV):
        raise EvaluationError(f"unknown evaluation mode {mode!r}")
    test_entries = split.entries(block, Split.TEST)
    if not test_entries:
        raise EvaluationError(f"block {block.display_variate!r} has no TEST records")

    variate_modes = (MODE_FULL, MODE_ANV) if mode == EVAL_ALL else (MODE_ANV,)
    truths: list[int] = []
    preds: list[int] = []
    for entry in test_entries:
        truth = block.class_index[entry.target.author_id]
        for variate_mode in variate_modes:
            prediction = predict_author(
                params,
                block.class_index,
                entry.record,
                entry.target.display_name,
                variate_mode,
                encoders,
                aggregation=aggregation,
            )
            truths.append(truth)
            preds.append(block.class_index[prediction.chosen])
    return micro_macro_report(truths, preds, block.n_classes, mode=mode)


def render_report(report: EvalReport) -> str:
    rows = [
        ("MiAP", report.miap),
        ("MaAP", report.maap),
        ("MiAR", report.miar),
        ("MaAR", report.maar),
        ("MiAF1", report.miaf1),
        ("MaAF1", report.maaf1),
    ]
    label = "All" if report.mode == EVAL_ALL else report.mode
    lines = [f"{name} ({label})\t{value:.3f}" for name, value in rows]
    lines.append(f"instances\t{report.instance_count}")
    return "\n".join(lines)
