"""Counting metrics and prediction-file evaluation.

``mse`` is the literal mean of squared count errors. Counting papers usually
report its square root under the name MSE, so reports carry both; compare
``rmse`` against published "MSE" columns.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalPair:
    image_id: str
    predicted: float
    truth: int


@dataclass
class EvalReport:
    mae: float
    mse: float
    rmse: float
    n: int
    unmatched: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def format(self) -> str:
        lines = [f"n     {self.n}", f"mae   {self.mae:.6f}", f"mse   {self.mse:.6f}",
                 f"rmse  {self.rmse:.6f}"]
        if self.unmatched:
            lines.append(f"unmatched ids ({len(self.unmatched)}): {', '.join(self.unmatched)}")
        return "\n".join(lines)


def _errors(pairs) -> np.ndarray:
    pairs = list(pairs)
    if not pairs:
        raise ValueError("cannot evaluate an empty prediction set")
    return np.array([p.predicted - p.truth for p in pairs], dtype=np.float64)


def mae(pairs) -> float:
    return float(np.mean(np.abs(_errors(pairs))))


def mse(pairs) -> tuple[float, float]:
    """Return ``(mse, rmse)``."""
    m = float(np.mean(_errors(pairs) ** 2))
    return m, math.sqrt(m)


def report(pairs, unmatched=()) -> EvalReport:
    pairs = list(pairs)
    m, r = mse(pairs)
    return EvalReport(mae(pairs), m, r, len(pairs), sorted(unmatched))


def read_predictions(path) -> dict:
    """Parse ``<image id> <count>`` lines (whitespace or comma separated).

    Blank lines and ``#`` comments are skipped; duplicate ids are an error.
    """
    preds = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        bits = line.replace(",", " ").split()
        if len(bits) != 2:
            raise ValueError(f"{path}:{lineno}: expected '<id> <count>', got {raw!r}")
        image_id, value = bits
        if image_id in preds:
            raise ValueError(f"{path}:{lineno}: duplicate prediction id {image_id!r}")
        count = float(value)
        if not math.isfinite(count) or count < 0:
            raise ValueError(f"{path}:{lineno}: prediction must be a finite non-negative number")
        preds[image_id] = count
    return preds


def manifest_counts(manifest) -> dict:
    """Map image id (file stem) -> ground-truth count."""
    if isinstance(manifest, (str, Path)):
        manifest = json.loads(Path(manifest).read_text())
    return {Path(r["image"]).stem: int(r["count"]) for r in manifest["records"]}


def evaluate(predictions, manifest) -> EvalReport:
    preds = read_predictions(predictions) if isinstance(predictions, (str, Path)) else dict(predictions)
    truth = manifest_counts(manifest)
    unmatched = [i for i in preds if i not in truth]
    pairs = [EvalPair(i, preds[i], truth[i]) for i in sorted(preds) if i in truth]
    if not pairs:
        raise ValueError("no prediction id matches the manifest")
    if unmatched:
        log.warning("%d prediction id(s) not in manifest: %s", len(unmatched), ", ".join(sorted(unmatched)))
    return report(pairs, unmatched)
