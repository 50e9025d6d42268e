"""Explanation artifacts: best-fit, all-hypothesis contrast, amplitude
counterfactuals, and retrieval of similar stored cases.
"""

from __future__ import annotations

import enum
import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import StoreError, ValidationError
from .pipeline import CaseReport
from .segmentation import runs
from .shapes import Diagnosis, ShapeParams, params_from_json, params_to_json


class ExplanationKind(enum.Enum):
    Abductive = "abductive"
    Contrastive = "contrastive"
    Counterfactual = "counterfactual"
    Case = "case"


@dataclass(frozen=True)
class Explanation:
    kind: ExplanationKind
    payload: dict


def abductive(report: CaseReport) -> Explanation:
    """The winning hypothesis with its heart-phase tag (the best explanation)."""
    best = report.fits[report.resolved]
    payload = {
        "diagnosis": report.resolved.value,
        "phase": report.phase.value,
        "no_murmur": report.resolved is Diagnosis.N,
        "lack_of_fit": best.lack_of_fit,
        "params": params_to_json(best.diagnosis, best.params),
    }
    return Explanation(kind=ExplanationKind.Abductive, payload=payload)


def contrastive(report: CaseReport) -> Explanation:
    """Every hypothesis with its fit quality and phase flag, in ranking order."""
    entries = [
        {
            "diagnosis": f.diagnosis.value,
            "lack_of_fit": f.lack_of_fit,
            "phase_compatible": f.phase_compatible,
            "n_free_params": f.n_free_params,
            "params": params_to_json(f.diagnosis, f.params),
        }
        for f in report.ranking.order
    ]
    return Explanation(
        kind=ExplanationKind.Contrastive,
        payload={"resolved": report.resolved.value, "entries": entries, "notes": list(report.ranking.notes)},
    )


def counterfactual(report: CaseReport, target: Diagnosis) -> Explanation:
    """Signed amplitude deltas that would make the target hypothesis fit.

    Positive values mean the amplitude would need to be higher to match the
    target's fitted shape, negative lower. Deltas are reported inside the
    murmur mask only; outside it every shape is zero by construction.
    """
    if target is report.resolved:
        raise ValidationError("no counterfactual needed: target equals the resolved diagnosis")
    if target not in report.fits:
        raise ValidationError(f"no fitted hypothesis for {target.value}")
    fit = report.fits[target]
    delta = np.zeros_like(report.envelope.values)
    bits = report.mask.bits
    delta[bits] = fit.shape.values[bits] - report.envelope.values[bits]
    payload = {
        "target": target.value,
        "resolved": report.resolved.value,
        "delta": [float(v) for v in delta],
        "envelope": [float(v) for v in report.envelope.values],
        "grid_hz": report.envelope.grid_hz,
        "t0_s": report.envelope.t0_s,
        "mask_runs": [[int(a), int(b)] for a, b in runs(bits)],
    }
    return Explanation(kind=ExplanationKind.Counterfactual, payload=payload)


@dataclass(frozen=True)
class CaseRecord:
    """One stored case for example-based explanations."""

    id: str
    resolved: Diagnosis
    params: ShapeParams
    lack_of_fit: float
    envelope_digest: str
    source_path: str

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "resolved": self.resolved.value,
            "params": params_to_json(self.resolved, self.params),
            "lack_of_fit": self.lack_of_fit,
            "envelope_digest": self.envelope_digest,
            "source_path": self.source_path,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CaseRecord":
        y = Diagnosis(obj["resolved"])
        _, params = params_from_json(obj["params"])
        return cls(
            id=str(obj["id"]),
            resolved=y,
            params=params,
            lack_of_fit=float(obj["lack_of_fit"]),
            envelope_digest=str(obj["envelope_digest"]),
            source_path=str(obj.get("source_path", "")),
        )


def envelope_digest(values: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(values, dtype=np.float64).tobytes()).hexdigest()[:16]


class CaseStore:
    """Append-only JSON-lines store of analyzed cases."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def load(self) -> list[CaseRecord]:
        if not self.path.exists():
            return []
        records = []
        bad_lines = []
        for lineno, line in enumerate(self.path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append(CaseRecord.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                bad_lines.append(lineno)
        if bad_lines:
            raise StoreError(f"{self.path}: corrupt store lines: {bad_lines}")
        return records

    def _next_id(self, existing: list[CaseRecord]) -> str:
        top = 0
        for rec in existing:
            if rec.id.startswith("case-"):
                try:
                    top = max(top, int(rec.id[5:]))
                except ValueError:
                    pass
        return f"case-{top + 1:06d}"

    def append(self, report: CaseReport) -> CaseRecord:
        existing = self.load()
        best = report.fits[report.resolved]
        record = CaseRecord(
            id=self._next_id(existing),
            resolved=report.resolved,
            params=best.params,
            lack_of_fit=best.lack_of_fit,
            envelope_digest=envelope_digest(report.envelope.values),
            source_path=report.source_path or report.instance_id,
        )
        with open(self.path, "a") as fh:
            fh.write(json.dumps(record.to_json()) + "\n")
        return record

    def retrieve(self, y: Diagnosis, k: int) -> list[CaseRecord]:
        """The k best-fitting stored cases with the given diagnosis."""
        matching = [r for r in self.load() if r.resolved is y]
        matching.sort(key=lambda r: (r.lack_of_fit, r.id))
        if k > len(matching):
            warnings.warn(
                f"requested {k} cases for {y.value} but only {len(matching)} stored", stacklevel=2
            )
        return matching[:k]


def store_case(store: CaseStore, report: CaseReport) -> CaseRecord:
    return store.append(report)


def retrieve_cases(store: CaseStore, y: Diagnosis, k: int) -> list[CaseRecord]:
    return store.retrieve(y, k)
