"""Cross-validated evaluation of the built-in classifier on encoded images."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .context import ClassMeanContext
from .encoding import CpcrEncoder, EncodingConfig, Pairing
from .mlp import MlpClassifier, TrainConfig
from .preprocessing import DiscreteDataset, FoldPlan
from .validation import stable_seed


@dataclass
class CvReport:
    """Per-fold validation accuracies plus everything needed to rerun the experiment.

    ``wall_clock`` is measurement metadata and is excluded from
    :meth:`to_dict` so serialized reports stay bit-reproducible.
    """

    fold_accuracies: list[float]
    mean_accuracy: float
    k: int
    stratified: bool
    fold_seed: int
    encoding: dict
    train: dict
    context: bool
    n_cases: int
    fold_val_case_ids: list[list[int]] = field(default_factory=list)
    dataset: str = "dataset"
    wall_clock: float | None = None

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "n_cases": self.n_cases,
            "k": self.k,
            "stratified": self.stratified,
            "fold_seed": self.fold_seed,
            "context": self.context,
            "encoding": self.encoding,
            "train": self.train,
            "fold_accuracies": self.fold_accuracies,
            "mean_accuracy": self.mean_accuracy,
            "fold_val_case_ids": self.fold_val_case_ids,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CvReport":
        return cls(
            fold_accuracies=list(d["fold_accuracies"]),
            mean_accuracy=float(d["mean_accuracy"]),
            k=int(d["k"]),
            stratified=bool(d["stratified"]),
            fold_seed=int(d["fold_seed"]),
            encoding=dict(d["encoding"]),
            train=dict(d["train"]),
            context=bool(d["context"]),
            n_cases=int(d["n_cases"]),
            fold_val_case_ids=[list(v) for v in d.get("fold_val_case_ids", [])],
            dataset=d.get("dataset", "dataset"),
        )


def encode_all(ds: DiscreteDataset, pairing: Pairing | None,
               config: EncodingConfig) -> list:
    """Encode every case of a discrete dataset with one encoder."""
    encoder = CpcrEncoder(
        grid=config.grid, cell_px=config.cell_px, origin=config.origin,
        collision=config.collision, color_mode=config.color_mode,
        marker=config.marker, schedule=config.schedule, pairing=pairing,
        rgb_seed=config.rgb_seed, cross_start=config.cross_start,
        cross_order=config.cross_order,
    )
    encoder.fit(ds.values)
    return encoder.encode_dataset(ds)


def _clf_for_fold(train_config: TrainConfig, fold: int) -> MlpClassifier:
    return MlpClassifier(
        epochs=train_config.epochs,
        batch_size=train_config.batch_size,
        learning_rate=train_config.learning_rate,
        momentum=train_config.momentum,
        seed=stable_seed(train_config.seed, fold),
        input_divisor=train_config.input_divisor,
    )


def run_fold(images, y, fold_plan: FoldPlan, fold: int, train_config: TrainConfig,
             context: bool = False, mean_as_gray: bool = False):
    """Train on one fold's training part, return (accuracy, fitted classifier,
    validation images, validation positional indices).

    With context on, class means come from the training fold only and both
    partitions are composed into padded double images.
    """
    train_idx, val_idx = fold_plan.split(fold)
    train_images = [images[i] for i in train_idx]
    val_images = [images[i] for i in val_idx]
    if context:
        ctx = ClassMeanContext(mean_as_gray=mean_as_gray).fit(train_images, y[train_idx])
        train_images = ctx.transform(train_images)
        val_images = ctx.transform(val_images)
    clf = _clf_for_fold(train_config, fold)
    clf.fit(train_images, y[train_idx])
    accuracy = float(np.mean(clf.predict(val_images) == y[val_idx]))
    return accuracy, clf, val_images, val_idx


def cross_validate(ds: DiscreteDataset, pairing: Pairing | None,
                   config: EncodingConfig, fold_plan: FoldPlan,
                   train_config: TrainConfig, context: bool = False,
                   mean_as_gray: bool = False, n_jobs: int | None = None) -> CvReport:
    """Encode, train and score the classifier across every fold of the plan.

    Per-fold training seeds are derived from the train seed and the fold
    index, so results do not depend on execution order or ``n_jobs``.
    """
    if len(fold_plan.case_ids) != ds.n_cases or not np.array_equal(
        fold_plan.case_ids, ds.case_ids
    ):
        raise ValueError("fold plan does not cover this dataset")
    started = time.perf_counter()
    pairing = pairing or Pairing.identity(ds.n_values)
    config = config.with_schedule(pairing.n_pairs)
    images = encode_all(ds, pairing, config)
    results = Parallel(n_jobs=n_jobs or 1, prefer="threads")(
        delayed(run_fold)(images, ds.y, fold_plan, fold, train_config, context, mean_as_gray)
        for fold in range(fold_plan.k)
    )
    accuracies = [acc for acc, _, _, _ in results]
    val_ids = [ds.case_ids[idx].tolist() for _, _, _, idx in results]
    return CvReport(
        fold_accuracies=accuracies,
        mean_accuracy=float(np.mean(accuracies)),
        k=fold_plan.k,
        stratified=fold_plan.stratified,
        fold_seed=fold_plan.seed,
        encoding={**config.to_dict(), "pairing": list(pairing.order)},
        train=train_config.to_dict(),
        context=context,
        n_cases=ds.n_cases,
        fold_val_case_ids=val_ids,
        dataset=ds.name,
        wall_clock=time.perf_counter() - started,
    )
