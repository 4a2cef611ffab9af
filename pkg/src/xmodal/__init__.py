"""Cross-modal latent-space exploration toolkit.

Train a two-modality contrastive autoencoder on a synthetic paired cohort,
project its latent space with exact t-SNE, slice cohorts with filters and
lasso selections, reconstruct / perturb / interpolate / translate latents,
and compare downstream predictions across modality conditions — in-process
or over the HTTP service.
"""

from .dataset import CovariateRecord, Dataset, GroundTruthFactors, SubjectRecord
from .errors import (
    ArgumentError,
    ContractError,
    DimensionError,
    ExplorerError,
    FormatError,
    NotFoundError,
    NumericError,
    TrainingError,
)
from .model import (
    LatentStore,
    LatentVector,
    ModelCheckpoint,
    TrainConfig,
    compute_latents,
    contrastive_loss,
    decode,
    encode,
    fuse,
    reconstruction_loss,
    train,
)
from .synth import generate_cohort, render_ecg, render_mri, split_counts
from .tsne import Embedding2D, TsneConfig, conditional_affinities, tsne_fit

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "ContractError",
    "CovariateRecord",
    "Dataset",
    "DimensionError",
    "Embedding2D",
    "ExplorerError",
    "FormatError",
    "GroundTruthFactors",
    "LatentStore",
    "LatentVector",
    "ModelCheckpoint",
    "NotFoundError",
    "NumericError",
    "SubjectRecord",
    "TrainConfig",
    "TrainingError",
    "TsneConfig",
    "compute_latents",
    "conditional_affinities",
    "contrastive_loss",
    "decode",
    "encode",
    "fuse",
    "generate_cohort",
    "reconstruction_loss",
    "render_ecg",
    "render_mri",
    "split_counts",
    "train",
    "tsne_fit",
]
