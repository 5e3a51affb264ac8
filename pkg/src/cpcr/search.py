"""Random search over attribute pairings and intensity schedules.

Candidates are scored by inner cross-validation on training data only; the
identity pairing with the default schedule is always candidate 0, so the
selected configuration can never score below the baseline. Ties go to the
earliest candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator

from .encoding import EncodingConfig, IntensitySchedule, Pairing, default_schedule
from .evaluate import cross_validate
from .mlp import TrainConfig
from .preprocessing import DiscreteDataset, make_folds
from .validation import as_rng, stable_seed

SEARCH_TARGETS = ("pairing", "intensities", "both")


def sample_pairing(n: int, rng) -> Pairing:
    """Uniformly random pairing permutation of n (even) value indices."""
    if n % 2 != 0:
        raise ValueError("pairings need an even value count; pad the data first")
    return Pairing(tuple(int(i) for i in as_rng(rng).permutation(n)))


def sample_schedule(m: int, rng) -> IntensitySchedule:
    """m distinct levels from {0..253}, sorted ascending (darkest first)."""
    if not 1 <= m <= 254:
        raise ValueError("pair count must be in 1..254")
    levels = as_rng(rng).choice(254, size=m, replace=False)
    return IntensitySchedule(tuple(int(v) for v in np.sort(levels)))


@dataclass
class SearchSpec:
    """What to sample and how to score it."""

    k: int = 30
    target: str = "both"
    seed: int = 0
    inner_folds: int = 3
    train: TrainConfig = field(default_factory=TrainConfig)
    stratified: bool = False

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.inner_folds < 2:
            raise ValueError("inner_folds must be >= 2")
        if self.target not in SEARCH_TARGETS:
            raise ValueError(f"target must be one of {SEARCH_TARGETS}")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "target": self.target,
            "seed": self.seed,
            "inner_folds": self.inner_folds,
            "stratified": self.stratified,
            "train": self.train.to_dict(),
        }


@dataclass
class SearchCandidate:
    pairing: Pairing
    schedule: IntensitySchedule
    accuracy: float

    def to_dict(self) -> dict:
        return {
            "pairing": list(self.pairing.order),
            "schedule": list(self.schedule.levels),
            "accuracy": self.accuracy,
        }


@dataclass
class SearchTrace:
    """Ordered evaluation record; index 0 is always the baseline."""

    candidates: list[SearchCandidate]
    best_index: int

    @property
    def baseline(self) -> SearchCandidate:
        return self.candidates[0]

    @property
    def best(self) -> SearchCandidate:
        return self.candidates[self.best_index]

    def to_dict(self) -> dict:
        return {
            "candidates": [c.to_dict() for c in self.candidates],
            "best_index": self.best_index,
        }


def random_search(ds_train: DiscreteDataset, spec: SearchSpec,
                  config: EncodingConfig | None = None,
                  excluded_case_ids=None, n_jobs: int | None = None) -> SearchTrace:
    """Score the baseline plus ``spec.k`` sampled alternatives by inner CV.

    Args:
        ds_train: training cases only; pass the outer validation fold's case
            ids as ``excluded_case_ids`` to assert there is no leakage.
        spec: sampling target, candidate count, seeds and inner evaluation.
        config: encoding template; its pairing-independent fields are kept,
            the schedule and pairing come from the candidates.
        n_jobs: parallel candidate evaluation (results are order-independent).
    """
    if excluded_case_ids is not None:
        overlap = np.intersect1d(ds_train.case_ids, np.asarray(excluded_case_ids))
        if overlap.size:
            raise ValueError(
                f"validation cases leaked into the search training data: {overlap[:5]}"
            )
    config = config or EncodingConfig()
    n = ds_train.n_values
    m = n // 2
    base = SearchCandidate(Pairing.identity(n), default_schedule(m), float("nan"))

    candidates = [base]
    streams = np.random.SeedSequence(spec.seed).spawn(spec.k)
    for stream in streams:
        rng = np.random.default_rng(stream)
        pairing = sample_pairing(n, rng) if spec.target in ("pairing", "both") \
            else Pairing.identity(n)
        schedule = sample_schedule(m, rng) if spec.target in ("intensities", "both") \
            else default_schedule(m)
        candidates.append(SearchCandidate(pairing, schedule, float("nan")))

    inner_plan = make_folds(
        ds_train, spec.inner_folds, stratified=spec.stratified,
        seed=stable_seed(spec.seed, 0x1CC),
    )

    def score(cand: SearchCandidate) -> float:
        cand_config = EncodingConfig(
            grid=config.grid, cell_px=config.cell_px, origin=config.origin,
            collision=config.collision, schedule=cand.schedule,
            color_mode=config.color_mode, marker=config.marker,
            rgb_seed=config.rgb_seed, cross_start=config.cross_start,
            cross_order=config.cross_order,
        )
        report = cross_validate(
            ds_train, cand.pairing, cand_config, inner_plan, spec.train
        )
        return report.mean_accuracy

    accuracies = Parallel(n_jobs=n_jobs or 1, prefer="threads")(
        delayed(score)(c) for c in candidates
    )
    for cand, acc in zip(candidates, accuracies):
        cand.accuracy = float(acc)
    best = int(np.argmax([c.accuracy for c in candidates]))  # first max wins ties
    return SearchTrace(candidates=candidates, best_index=best)


class RandomPairingSearch(BaseEstimator):
    """Estimator wrapper: fit on (grid values, labels), expose the best encoding.

    After fit, ``best_pairing_`` and ``best_schedule_`` hold the winning
    configuration and ``trace_`` the full evaluation record.
    """

    def __init__(self, k=30, target="both", seed=0, inner_folds=3, grid=10,
                 cell_px=3, origin="ulc", collision="overwrite_last",
                 epochs=20, batch_size=32, learning_rate=0.01, momentum=0.9):
        self.k = k
        self.target = target
        self.seed = seed
        self.inner_folds = inner_folds
        self.grid = grid
        self.cell_px = cell_px
        self.origin = origin
        self.collision = collision
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum

    def fit(self, X, y):
        ds = DiscreteDataset(
            values=np.asarray(X), y=np.asarray(y),
            case_ids=np.arange(len(y)), grid=self.grid,
            class_names=[str(c) for c in np.unique(y)],
            attr_names=[f"x{j + 1}" for j in range(np.asarray(X).shape[1])],
        )
        spec = SearchSpec(
            k=self.k, target=self.target, seed=self.seed,
            inner_folds=self.inner_folds,
            train=TrainConfig(
                epochs=self.epochs, batch_size=self.batch_size,
                learning_rate=self.learning_rate, momentum=self.momentum,
                seed=self.seed,
            ),
        )
        config = EncodingConfig(
            grid=self.grid, cell_px=self.cell_px, origin=self.origin,
            collision=self.collision,
        )
        self.trace_ = random_search(ds, spec, config)
        self.best_pairing_ = self.trace_.best.pairing
        self.best_schedule_ = self.trace_.best.schedule
        self.best_score_ = self.trace_.best.accuracy
        return self
