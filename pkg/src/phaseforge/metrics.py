"""Evaluation metrics: wrapped phase error, grayscale error, fringe-order
error rate, and report emission (JSON + float rasters + 8-bit previews)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import formats
from .fringe import AbsolutePhaseMap, FringeSet, PhaseMap, wrap, wrapped_phase


@dataclass(frozen=True)
class Metrics:
    phase_error_map: np.ndarray | None
    mean_abs_phase_error: float | None
    max_abs_phase_error: float | None
    grayscale_error_map: np.ndarray | None
    mean_grayscale_error: float | None
    order_error_rate: float | None
    valid_pixel_count: int

    def summary(self) -> dict:
        return {
            "mean_abs_phase_error": self.mean_abs_phase_error,
            "max_abs_phase_error": self.max_abs_phase_error,
            "mean_grayscale_error": self.mean_grayscale_error,
            "order_error_rate": self.order_error_rate,
            "valid_pixel_count": self.valid_pixel_count,
        }


def _phase_metrics(pred: PhaseMap, gt: PhaseMap):
    if pred.phase.shape != gt.phase.shape:
        raise ValueError("phase map dimensions differ")
    valid = pred.valid_mask & gt.valid_mask
    error = np.full(pred.phase.shape, np.nan)
    diff = wrap(pred.phase[valid] - gt.phase[valid])
    error[valid] = diff
    count = int(valid.sum())
    mean_err = float(np.abs(diff).mean()) if count else 0.0
    max_err = float(np.abs(diff).max()) if count else 0.0
    return error, mean_err, max_err, count


def evaluate_phase(pred: PhaseMap, gt: PhaseMap) -> Metrics:
    """Wrapped phase differences over the joint valid mask."""
    error, mean_err, max_err, count = _phase_metrics(pred, gt)
    return Metrics(phase_error_map=error, mean_abs_phase_error=mean_err,
                   max_abs_phase_error=max_err, grayscale_error_map=None,
                   mean_grayscale_error=None, order_error_rate=None,
                   valid_pixel_count=count)


def evaluate_fringes(pred: FringeSet, gt: FringeSet) -> Metrics:
    """Grayscale error over the stacks plus phase error of the demodulated sets."""
    if pred.shape != gt.shape or pred.phase_steps != gt.phase_steps:
        raise ValueError("fringe set dimensions differ")
    gray = np.abs(pred.stack() - gt.stack()).mean(axis=0)
    phase_metrics = evaluate_phase(wrapped_phase(pred), wrapped_phase(gt))
    return Metrics(phase_error_map=phase_metrics.phase_error_map,
                   mean_abs_phase_error=phase_metrics.mean_abs_phase_error,
                   max_abs_phase_error=phase_metrics.max_abs_phase_error,
                   grayscale_error_map=gray,
                   mean_grayscale_error=float(gray.mean()),
                   order_error_rate=None,
                   valid_pixel_count=phase_metrics.valid_pixel_count)


def evaluate_absolute(pred: AbsolutePhaseMap, gt: AbsolutePhaseMap) -> Metrics:
    """Unwrapped phase differences plus the fringe-order error rate."""
    if pred.phase.shape != gt.phase.shape:
        raise ValueError("phase map dimensions differ")
    valid = pred.valid_mask & gt.valid_mask
    error = np.full(pred.phase.shape, np.nan)
    error[valid] = pred.phase[valid] - gt.phase[valid]
    count = int(valid.sum())
    abs_err = np.abs(error[valid])
    order_errors = int((pred.order[valid] != gt.order[valid]).sum())
    return Metrics(phase_error_map=error,
                   mean_abs_phase_error=float(abs_err.mean()) if count else 0.0,
                   max_abs_phase_error=float(abs_err.max()) if count else 0.0,
                   grayscale_error_map=None, mean_grayscale_error=None,
                   order_error_rate=order_errors / count if count else 0.0,
                   valid_pixel_count=count)


def evaluate(pred, gt) -> Metrics:
    if isinstance(pred, FringeSet) and isinstance(gt, FringeSet):
        return evaluate_fringes(pred, gt)
    if isinstance(pred, AbsolutePhaseMap) and isinstance(gt, AbsolutePhaseMap):
        return evaluate_absolute(pred, gt)
    if isinstance(pred, PhaseMap) and isinstance(gt, PhaseMap):
        return evaluate_phase(pred, gt)
    raise ValueError("prediction and ground truth must be the same kind of map")


def _write_map(out_dir: Path, name: str, raster: np.ndarray, summary: dict) -> None:
    finite = np.nan_to_num(raster, nan=0.0)
    formats.write_f32r(out_dir / f"{name}.f32r", finite.astype(np.float32))
    lo, hi = float(finite.min()), float(finite.max())
    span = hi - lo if hi > lo else 1.0
    formats.write_pgm(out_dir / f"{name}.pgm", (finite - lo) / span)
    summary[f"{name}_range"] = [lo, hi]


def report(metrics_list, out_path) -> dict:
    """Write a JSON summary plus per-entry error rasters and preview images."""
    out_dir = Path(out_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, metrics in enumerate(metrics_list):
        summary = metrics.summary()
        if metrics.phase_error_map is not None:
            _write_map(out_dir, f"phase_error_{i:03d}", metrics.phase_error_map, summary)
        if metrics.grayscale_error_map is not None:
            _write_map(out_dir, f"grayscale_error_{i:03d}", metrics.grayscale_error_map,
                       summary)
        entries.append(summary)
    payload = {"entries": entries, "count": len(entries)}
    formats.write_json(out_dir / "report.json", payload)
    return payload
