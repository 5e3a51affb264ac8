"""Occlusion-based cell importance and pair-frequency attribution.

The grid is tiled into coarse blocks (blocks of 2x2 grid cells for a 10-wide
grid give 25 of them), numbered left to right, bottom to top: block 1 covers
grid coordinates x,y in {1,2}, block 13 covers {5,6}, block 25 covers
{9,10}. Covering a block with background white and measuring the validation
accuracy drop ranks the blocks by how informative they are; counting which
attribute pairs land inside a block attributes that importance to concrete
attribute pairs and value pairs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .encoding import BACKGROUND, CpcrImage, EncodingConfig, Pairing, cell_block
from .evaluate import encode_all, run_fold
from .mlp import TrainConfig
from .preprocessing import DiscreteDataset, FoldPlan


@dataclass(frozen=True)
class IccCell:
    """One coarse covering block: its id and the grid coordinates it covers."""

    id: int
    coords: tuple[tuple[int, int], ...]

    def contains(self, x: int, y: int) -> bool:
        return (x, y) in self.coords


def icc_cells(grid: int, block_size: int = 2) -> list[IccCell]:
    """Tile a grid into (grid/block_size)^2 covering blocks.

    Ids increase left to right, then bottom to top, starting at 1.
    """
    if block_size < 1 or grid % block_size != 0:
        raise ValueError(f"block size {block_size} must divide the grid {grid}")
    per_side = grid // block_size
    cells = []
    for by in range(per_side):
        for bx in range(per_side):
            coords = tuple(
                (bx * block_size + dx + 1, by * block_size + dy + 1)
                for dx in range(block_size)
                for dy in range(block_size)
            )
            cells.append(IccCell(id=by * per_side + bx + 1, coords=coords))
    return cells


def cover_cell(image: CpcrImage, cell: IccCell,
               config: EncodingConfig | None = None) -> CpcrImage:
    """White out one covering block; every other pixel is untouched.

    On composed double images, the block is masked at the same offset inside
    every class half, below any padding rows.
    """
    config = config or image.config
    covered = image.copy()
    comp = image.composition or {"n_halves": 1, "half_width": image.width,
                                 "pad_top": 0, "pad_bottom": 0}
    n_halves = comp.get("n_halves", 1)
    half_w = comp.get("half_width", image.width)
    pad_top = comp.get("pad_top", 0)
    for x, y in cell.coords:
        rows, cols = cell_block(config, x, y)
        for h in range(n_halves):
            r = slice(rows.start + pad_top, rows.stop + pad_top)
            c = slice(cols.start + h * half_w, cols.stop + h * half_w)
            covered.pixels[r, c] = BACKGROUND
    return covered


@dataclass
class IccReport:
    """Mean covered accuracy per block, ranked ascending (most informative first)."""

    grid: int
    block_size: int
    cell_accuracies: dict[int, float]
    baseline_accuracy: float
    ranking: list[int]
    most_informative: int
    k: int
    dataset: str = "dataset"
    wall_clock: float | None = None

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "grid": self.grid,
            "block_size": self.block_size,
            "k": self.k,
            "baseline_accuracy": self.baseline_accuracy,
            "cell_accuracies": {str(c): a for c, a in sorted(self.cell_accuracies.items())},
            "ranking": self.ranking,
            "most_informative": self.most_informative,
        }

    def to_text(self) -> str:
        lines = [f"baseline accuracy (uncovered): {self.baseline_accuracy:.4f}",
                 "", f"{'cell':>4}  {'accuracy':>8}"]
        for cid in self.ranking:
            lines.append(f"{cid:>4}  {self.cell_accuracies[cid]:>8.4f}")
        return "\n".join(lines) + "\n"


def icc_rank(ds: DiscreteDataset, pairing: Pairing | None, config: EncodingConfig,
             fold_plan: FoldPlan, train_config: TrainConfig, block_size: int = 2,
             context: bool = False, mean_as_gray: bool = False,
             n_jobs: int | None = None) -> IccReport:
    """Rank covering blocks by the validation accuracy drop they cause.

    Per fold, the classifier is trained once on uncovered training images;
    every block is then covered in the validation images only and scored.
    Accuracies are averaged over folds; the minimum marks the most
    informative block (ties go to the lower id).
    """
    started = time.perf_counter()
    pairing = pairing or Pairing.identity(ds.n_values)
    config = config.with_schedule(pairing.n_pairs)
    cells = icc_cells(config.grid, block_size)
    images = encode_all(ds, pairing, config)

    def fold_accuracies(fold: int):
        baseline, clf, val_images, val_idx = run_fold(
            images, ds.y, fold_plan, fold, train_config, context, mean_as_gray
        )
        y_val = ds.y[val_idx]
        per_cell = {}
        for cell in cells:
            masked = [cover_cell(img, cell, config) for img in val_images]
            per_cell[cell.id] = float(np.mean(clf.predict(masked) == y_val))
        return baseline, per_cell

    results = Parallel(n_jobs=n_jobs or 1, prefer="threads")(
        delayed(fold_accuracies)(fold) for fold in range(fold_plan.k)
    )
    baseline = float(np.mean([b for b, _ in results]))
    cell_accuracies = {
        cell.id: float(np.mean([per_cell[cell.id] for _, per_cell in results]))
        for cell in cells
    }
    ranking = sorted(cell_accuracies, key=lambda cid: (cell_accuracies[cid], cid))
    return IccReport(
        grid=config.grid,
        block_size=block_size,
        cell_accuracies=cell_accuracies,
        baseline_accuracy=baseline,
        ranking=ranking,
        most_informative=ranking[0],
        k=fold_plan.k,
        dataset=ds.name,
        wall_clock=time.perf_counter() - started,
    )


@dataclass
class FrequencyRow:
    """Counts of one attribute pair's values inside a covering block."""

    pair_index: int
    attr_indices: tuple[int, int]
    label: str
    counts: dict[tuple[int, int], int]
    total: int

    def to_dict(self) -> dict:
        return {
            "pair_index": self.pair_index,
            "attributes": list(self.attr_indices),
            "label": self.label,
            "counts": {f"({vx},{vy})": c for (vx, vy), c in sorted(self.counts.items())},
            "total": self.total,
        }


@dataclass
class FrequencyTable:
    """Per attribute pair, how often its values land in one covering block."""

    cell_id: int
    value_pairs: tuple[tuple[int, int], ...]
    rows: list[FrequencyRow] = field(default_factory=list)
    n_cases: int = 0
    dataset: str = "dataset"

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "cell": self.cell_id,
            "n_cases": self.n_cases,
            "value_pairs": [list(vp) for vp in self.value_pairs],
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_text(self) -> str:
        header = f"{'pair':<12}" + "".join(
            f"{f'({vx},{vy})':>9}" for vx, vy in self.value_pairs
        ) + f"{'total':>9}"
        lines = [f"cell {self.cell_id} ({self.n_cases} cases)", header]
        for r in self.rows:
            lines.append(
                f"{r.label:<12}"
                + "".join(f"{r.counts.get(vp, 0):>9}" for vp in self.value_pairs)
                + f"{r.total:>9}"
            )
        return "\n".join(lines) + "\n"


def pair_frequency(ds: DiscreteDataset, pairing: Pairing | None,
                   cell: IccCell) -> FrequencyTable:
    """Count, per attribute pair, the value pairs falling inside one block.

    Counts use the nominal (pre-collision) pair positions. Rows with a zero
    total are omitted; the rest are sorted by total descending, ties by the
    earlier pair.
    """
    pairing = pairing or Pairing.identity(ds.n_values)
    if pairing.n_values != ds.n_values:
        raise ValueError("pairing does not match the dataset width")
    value_pairs = tuple(sorted(cell.coords))
    in_cell = set(cell.coords)
    rows = []
    for k, (i, j) in enumerate(pairing.index_pairs()):
        counts: dict[tuple[int, int], int] = {}
        for r in range(ds.n_cases):
            vp = (int(ds.values[r, i]), int(ds.values[r, j]))
            if vp in in_cell:
                counts[vp] = counts.get(vp, 0) + 1
        total = sum(counts.values())
        if total > 0:
            rows.append(FrequencyRow(
                pair_index=k,
                attr_indices=(i, j),
                label=f"x{i + 1},x{j + 1}",
                counts=counts,
                total=total,
            ))
    rows.sort(key=lambda r: (-r.total, r.pair_index))
    return FrequencyTable(
        cell_id=cell.id,
        value_pairs=value_pairs,
        rows=rows,
        n_cases=ds.n_cases,
        dataset=ds.name,
    )
