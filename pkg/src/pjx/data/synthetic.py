"""Seeded synthetic grid-world datasets.

Each example scatters a few colored shapes over the grid. One of them is
the evidence object: the question asks for one of its attributes, the
answer names that attribute, the reference explanation is the template
"there is a <color> <shape> in row <r> column <c>", and the attention
ground truth is one-hot at its cell.

Tasks:
  attributes  one queried object plus distractors; questions alternate
              between "what shape is the <color> object" and "what color
              is the <shape> object". Objects in an image share no shape
              or color, so the question picks out exactly one cell.
  ambiguous   two objects, no question (activity mode); the stored answer
              chooses one of them at random. The image alone supports two
              answers, so a justifier that ignores the answer cannot know
              which object to describe.

Feature channels: shape one-hot | color one-hot | row one-hot | col
one-hot | zero padding, with Gaussian noise everywhere. Cell features are
enough to read off every word of the explanation once the cell is found.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ContractError
from ..features import SpatialFeatures, save_features
from ..pgm import write_pgm
from .records import Dataset, ExampleRecord, save_records

SHAPES = ("circle", "square", "triangle", "star", "diamond", "cross")
COLORS = ("red", "blue", "green", "yellow", "purple", "orange")


@dataclass
class SynthConfig:
    task: str = "attributes"  # "attributes" | "ambiguous"
    grid_n: int = 4
    grid_m: int = 4
    channels: int = 32
    n_train: int = 2000
    n_val: int = 200
    n_test: int = 200
    n_distractors: int = 2
    noise: float = 0.02

    def __post_init__(self):
        if self.task not in ("attributes", "ambiguous"):
            raise ContractError(f"unknown task {self.task!r}")
        needed = len(SHAPES) + len(COLORS) + self.grid_n + self.grid_m
        if self.channels < needed:
            raise ContractError(
                f"channels={self.channels} too small: shape/color/position channels need {needed}"
            )
        n_objects = 2 if self.task == "ambiguous" else 1 + self.n_distractors
        if n_objects > min(len(SHAPES), len(COLORS), self.grid_n * self.grid_m):
            raise ContractError("more objects per image than distinct shapes/colors/cells")


@dataclass
class SyntheticExample:
    record: ExampleRecord
    features: SpatialFeatures
    mask: np.ndarray  # N x M, one-hot at the evidence cell


@dataclass
class SyntheticDataset:
    config: SynthConfig
    seed: int
    examples: dict[str, list[SyntheticExample]]  # split -> examples

    def records(self) -> dict[str, list[ExampleRecord]]:
        return {s: [e.record for e in ex] for s, ex in self.examples.items()}


def _explanation(shape: str, color: str, row: int, col: int) -> str:
    return f"there is a {color} {shape} in row {row + 1} column {col + 1}"


def _base_grid(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    grid = rng.normal(0.0, cfg.noise, size=(cfg.channels, cfg.grid_n, cfg.grid_m))
    pos = len(SHAPES) + len(COLORS)
    for r in range(cfg.grid_n):
        grid[pos + r, r, :] += 1.0
    for c in range(cfg.grid_m):
        grid[pos + cfg.grid_n + c, :, c] += 1.0
    return grid


def _place(grid: np.ndarray, shape_i: int, color_i: int, row: int, col: int):
    grid[shape_i, row, col] += 1.0
    grid[len(SHAPES) + color_i, row, col] += 1.0


def _make_example(cfg: SynthConfig, rng: np.random.Generator, ex_id: str) -> SyntheticExample:
    n_objects = 2 if cfg.task == "ambiguous" else 1 + cfg.n_distractors
    cells = rng.choice(cfg.grid_n * cfg.grid_m, size=n_objects, replace=False)
    shapes = rng.choice(len(SHAPES), size=n_objects, replace=False)
    colors = rng.choice(len(COLORS), size=n_objects, replace=False)
    grid = _base_grid(cfg, rng)
    for k in range(n_objects):
        _place(grid, shapes[k], colors[k], *divmod(int(cells[k]), cfg.grid_m))

    target = int(rng.integers(n_objects)) if cfg.task == "ambiguous" else 0
    row, col = divmod(int(cells[target]), cfg.grid_m)
    shape, color = SHAPES[shapes[target]], COLORS[colors[target]]

    if cfg.task == "ambiguous":
        question: list[str] = []
        answer = shape
    elif rng.random() < 0.5:
        question = ["what", "shape", "is", "the", color, "object"]
        answer = shape
    else:
        question = ["what", "color", "is", "the", shape, "object"]
        answer = color

    mask = np.zeros((cfg.grid_n, cfg.grid_m))
    mask[row, col] = 1.0
    record = ExampleRecord(
        id=ex_id,
        features_path=f"features/{ex_id}.pjxf",
        question=question,
        answer=answer,
        explanations=[_explanation(shape, color, row, col)],
        att_gt_path=f"masks/{ex_id}.pgm",
    )
    return SyntheticExample(record, SpatialFeatures(grid, source="synthetic"), mask)


def generate_synthetic(cfg: SynthConfig, seed: int) -> SyntheticDataset:
    """Fully seed-deterministic dataset with disjoint train/val/test ids."""
    rng = np.random.default_rng(seed)
    examples: dict[str, list[SyntheticExample]] = {}
    for split, count in (("train", cfg.n_train), ("val", cfg.n_val), ("test", cfg.n_test)):
        examples[split] = [_make_example(cfg, rng, f"{split}-{i:05d}") for i in range(count)]
    return SyntheticDataset(cfg, seed, examples)


def write_dataset(ds: SyntheticDataset, out_dir) -> Dataset:
    """Emit JSONL splits plus one feature file and one mask per example."""
    out = Path(out_dir)
    (out / "features").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    for split, exs in ds.examples.items():
        save_records(out / f"{split}.jsonl", [e.record for e in exs])
        for e in exs:
            save_features(out / e.record.features_path, e.features)
            write_pgm(out / e.record.att_gt_path, (e.mask * 255).astype(np.int64))
    return Dataset(out, ds.records())


def evidence_cell(example: SyntheticExample) -> tuple[int, int]:
    flat = int(np.argmax(example.mask))
    return divmod(flat, example.mask.shape[1])


def validate_example(example: SyntheticExample) -> bool:
    """The evidence cell's strongest shape/color channels must agree with
    the stored answer and explanation."""
    rec = example.record
    r, c = evidence_cell(example)
    cell = example.features.grid[:, r, c]
    shape = SHAPES[int(np.argmax(cell[: len(SHAPES)]))]
    color = COLORS[int(np.argmax(cell[len(SHAPES) : len(SHAPES) + len(COLORS)]))]
    if rec.explanations[0] != _explanation(shape, color, r, c):
        return False
    if rec.question and rec.question[1] == "shape":
        return rec.answer == shape
    if rec.question and rec.question[1] == "color":
        return rec.answer == color
    return rec.answer == shape  # ambiguous task answers name the shape
