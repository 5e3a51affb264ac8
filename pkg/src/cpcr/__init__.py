"""Lossless pair-values raster encoding of numeric records.

An n-attribute record is discretized onto an integer grid, split into value
pairs, and drawn as a small image: each pair occupies the grid cell addressed
by its two values, with pair order encoded by intensity. The package bundles
the encoder/decoder, class-mean context composition, a from-scratch MLP
classifier with gradient saliency, occlusion-based cell importance,
pair-frequency attribution, and random search over pairings and intensity
schedules, all behind sklearn-style estimators plus a CLI.
"""

__version__ = "0.1.0"

from .analysis import (FrequencyTable, IccCell, IccReport, cover_cell,
                       icc_cells, icc_rank, pair_frequency)
from .context import ClassMeanContext, MeanImage, class_mean, compose_double, pad_square
from .datasets import (Dataset, RawCase, gen_swiss_roll, load_csv,
                       make_ionosphere_like, make_wbc_like, make_xor_pairs)
from .encoding import (AmbiguousDecodeError, CellPlacement, CpcrEncoder,
                       CpcrImage, DecodeError, EncodingConfig,
                       IntensitySchedule, MissingLevelError, Pairing,
                       decode, default_schedule, encode, pair_split,
                       place_pairs, render, strip_widths)
from .evaluate import CvReport, cross_validate
from .mlp import MlpClassifier, MlpModel, TrainConfig, forward, grad_check, saliency, train
from .preprocessing import (BinningSchema, DiscreteDataset, DiscretePoint,
                            Discretizer, FoldPlan, discretize, make_folds)
from .search import (RandomPairingSearch, SearchSpec, SearchTrace,
                     random_search, sample_pairing, sample_schedule)

__all__ = [
    "AmbiguousDecodeError", "BinningSchema", "CellPlacement", "ClassMeanContext",
    "CpcrEncoder", "CpcrImage", "CvReport", "Dataset", "DecodeError",
    "DiscreteDataset", "DiscretePoint", "Discretizer", "EncodingConfig",
    "FoldPlan", "FrequencyTable", "IccCell", "IccReport", "IntensitySchedule",
    "MeanImage", "MissingLevelError", "MlpClassifier", "MlpModel", "Pairing",
    "RandomPairingSearch", "RawCase", "SearchSpec", "SearchTrace", "TrainConfig",
    "class_mean", "compose_double", "cover_cell", "cross_validate", "decode",
    "default_schedule", "discretize", "encode", "forward", "gen_swiss_roll",
    "grad_check", "icc_cells", "icc_rank", "load_csv", "make_folds",
    "make_ionosphere_like", "make_wbc_like", "make_xor_pairs", "pad_square",
    "pair_frequency", "pair_split", "place_pairs", "random_search", "render",
    "saliency", "sample_pairing", "sample_schedule", "strip_widths", "train",
]
