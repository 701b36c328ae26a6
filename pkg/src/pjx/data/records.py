"""Dataset records and their JSON-lines serialization.

One JSON object per line, keys sorted on write so a load -> save -> load
round-trip is byte-identical. Paths inside records are relative to the
dataset root directory, which holds one ``<split>.jsonl`` per split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import DatasetError

SPLITS = ("train", "val", "test")


@dataclass
class ExampleRecord:
    id: str
    features_path: str
    question: list[str]  # token strings; empty in activity mode
    answer: str
    explanations: list[str]
    att_gt_path: str | None = None

    def to_json_obj(self) -> dict:
        obj = {
            "id": self.id,
            "features_path": self.features_path,
            "question": self.question,
            "answer": self.answer,
            "explanations": self.explanations,
        }
        if self.att_gt_path is not None:
            obj["att_gt_path"] = self.att_gt_path
        return obj


def _validate(obj: dict, line: int, require_explanations: bool) -> ExampleRecord:
    def need(field, types):
        if field not in obj:
            raise DatasetError("missing required field", field=field, line=line)
        if not isinstance(obj[field], types):
            raise DatasetError(f"field has wrong type {type(obj[field]).__name__}", field=field, line=line)
        return obj[field]

    rid = need("id", str)
    feats = need("features_path", str)
    question = need("question", list)
    if not all(isinstance(t, str) for t in question):
        raise DatasetError("question must be a list of token strings", field="question", line=line)
    answer = need("answer", str)
    if not answer:
        raise DatasetError("answer must be non-empty", field="answer", line=line)
    explanations = need("explanations", list)
    if not all(isinstance(e, str) for e in explanations):
        raise DatasetError("explanations must be strings", field="explanations", line=line)
    if require_explanations and not explanations:
        raise DatasetError("training records need at least one explanation", field="explanations", line=line)
    att = obj.get("att_gt_path")
    if att is not None and not isinstance(att, str):
        raise DatasetError("att_gt_path must be a string", field="att_gt_path", line=line)
    return ExampleRecord(rid, feats, question, answer, explanations, att)


def load_records(path, require_explanations: bool = False) -> list[ExampleRecord]:
    """Parse one JSONL file; malformed lines are reported with their number."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict):
                raise DatasetError("line is not a JSON object", line=lineno)
            records.append(_validate(obj, lineno, require_explanations))
    return records


def save_records(path, records: list[ExampleRecord]):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_obj(), sort_keys=True) + "\n")


class Dataset:
    """Split name -> records, rooted at a directory of ``<split>.jsonl`` files."""

    def __init__(self, root, splits: dict[str, list[ExampleRecord]]):
        self.root = Path(root)
        self.splits = splits

    def split(self, name: str) -> list[ExampleRecord]:
        if name not in self.splits:
            raise DatasetError(f"dataset at {self.root} has no split {name!r}")
        return self.splits[name]

    def resolve(self, rel_path: str) -> Path:
        return self.root / rel_path


def load_dataset(root, splits=SPLITS) -> Dataset:
    root = Path(root)
    found = {}
    for split in splits:
        path = root / f"{split}.jsonl"
        if not path.exists():
            raise DatasetError(f"missing split file {path}")
        found[split] = load_records(path, require_explanations=(split == "train"))
    return Dataset(root, found)
