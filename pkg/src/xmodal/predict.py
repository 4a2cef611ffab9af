"""Per-phenotype linear heads on latent vectors and the 3×K prediction matrix
comparing ECG-only, MRI-only, and fused inputs.

Binary phenotypes get logistic regression trained by full-batch gradient
descent (L2 1e-3, 500 iterations, step size 1/L so the loss is provably
non-increasing); continuous ones get ridge regression via normal equations
with the same penalty. Quality is attributable to the representation: the
heads are deliberately linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cohorts import CohortGroup
from .dataset import BOOL_COVARIATES, Dataset
from .errors import ArgumentError
from .model import LatentStore, LatentVector, ModelCheckpoint

CONDITIONS = ("ecg_only", "mri_only", "ecg_and_mri")
CONDITION_ORIGIN = {"ecg_only": "ecg", "mri_only": "mri", "ecg_and_mri": "fused"}

L2_WEIGHT = 1e-3
LOGISTIC_ITERS = 500


@dataclass(frozen=True)
class PhenotypeSpec:
    name: str
    kind: str            # "binary" | "continuous"
    source: str          # covariate name or synthetic factor name

    def __post_init__(self) -> None:
        if self.kind not in ("binary", "continuous"):
            raise ArgumentError("phenotype kind must be binary or continuous")


def default_phenotypes() -> list[PhenotypeSpec]:
    """Comorbidity flags plus heart_scale as the continuous size analog."""
    phenos = [PhenotypeSpec(name=n, kind="binary", source=n) for n in BOOL_COVARIATES]
    phenos.append(PhenotypeSpec(name="heart_scale", kind="continuous", source="heart_scale"))
    return phenos


# -- primitive fits -----------------------------------------------------------


def logistic_fit(x: np.ndarray, y: np.ndarray, l2: float = L2_WEIGHT,
                 iters: int = LOGISTIC_ITERS):
    """Full-batch GD on mean NLL + (l2/2)‖w‖²; returns (w, b, loss trace).

    Step size is 1/L with L = σ_max(X)²/(4n) + l2, the smoothness constant of
    the objective, so the trace is non-increasing by construction.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = x.shape
    sigma_max = np.linalg.norm(x, 2)
    lr = 1.0 / (sigma_max ** 2 / (4.0 * n) + l2)
    w = np.zeros(d)
    b = 0.0
    losses = np.empty(iters)
    for it in range(iters):
        logits = x @ w + b
        p = 1.0 / (1.0 + np.exp(-logits))
        # stable NLL: log(1+e^z) - y z
        nll = np.mean(np.logaddexp(0.0, logits) - y * logits)
        losses[it] = nll + 0.5 * l2 * float(w @ w)
        gw = x.T @ (p - y) / n + l2 * w
        gb = float(np.mean(p - y))
        w = w - lr * gw
        b = b - lr * gb
    return w, b, losses


def ridge_fit(x: np.ndarray, y: np.ndarray, l2: float = L2_WEIGHT):
    """Normal equations for (XᵀX/n + l2·I) w = Xᵀy/n on centered data."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = x.shape
    x_mean = x.mean(axis=0)
    y_mean = float(y.mean())
    xc = x - x_mean
    yc = y - y_mean
    w = np.linalg.solve(xc.T @ xc / n + l2 * np.eye(d), xc.T @ yc / n)
    b = y_mean - float(x_mean @ w)
    return w, b


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    sx = x[order]
    ranks = np.empty(len(x))
    i = 0
    n = len(x)
    while i < n:
        j = i
        while j + 1 < n and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auroc(scores: np.ndarray, labels: np.ndarray) -> float | None:
    """Rank-based AUROC with tie averaging; None for single-class labels."""
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _average_ranks(np.asarray(scores, dtype=np.float64))
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def r_squared(pred: np.ndarray, y: np.ndarray) -> float:
    y = np.asarray(y, dtype=np.float64)
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0:
        return 0.0
    return 1.0 - ss_res / ss_tot


def auroc_permutation_null(scores: np.ndarray, labels: np.ndarray,
                           n_permutations: int = 200, seed: int = 0):
    """Mean and std of AUROC under label shuffling (the chance distribution)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.asarray(labels).astype(bool)
    vals = []
    for _ in range(n_permutations):
        shuffled = rng.permutation(labels)
        a = auroc(scores, shuffled)
        if a is not None:
            vals.append(a)
    vals = np.array(vals)
    return float(vals.mean()), float(vals.std())


# -- heads ---------------------------------------------------------------------


@dataclass
class Head:
    phenotype: str
    condition: str
    kind: str
    w: np.ndarray | None = None
    b: float = 0.0
    metric: float | None = None       # test AUROC (binary) or R² (continuous)
    skipped: bool = False
    skip_reason: str | None = None

    def predict(self, x_standardized: np.ndarray) -> np.ndarray:
        if self.skipped or self.w is None:
            raise ArgumentError(f"head {self.phenotype}/{self.condition} was skipped")
        raw = x_standardized @ self.w + self.b
        if self.kind == "binary":
            return 1.0 / (1.0 + np.exp(-raw))
        return raw


@dataclass
class FittedHeads:
    phenotypes: list[PhenotypeSpec]
    scaler_mean: dict[str, np.ndarray]
    scaler_std: dict[str, np.ndarray]
    heads: dict[tuple[str, str], Head] = field(default_factory=dict)

    def head(self, phenotype: str, condition: str) -> Head:
        return self.heads[(phenotype, condition)]

    def standardize(self, condition: str, x: np.ndarray) -> np.ndarray:
        return (x - self.scaler_mean[condition]) / self.scaler_std[condition]


def _phenotype_values(dataset: Dataset, spec: PhenotypeSpec, ids: np.ndarray) -> np.ndarray:
    rows = np.searchsorted(dataset.ids, ids)
    if spec.source in BOOL_COVARIATES:
        return dataset.covariate_values(spec.source)[rows].astype(np.float64)
    if spec.source in ("age", "bmi"):
        return dataset.covariate_values(spec.source)[rows].astype(np.float64)
    return dataset.factor_values(spec.source)[rows].astype(np.float64)


def fit_heads(ckpt: ModelCheckpoint, dataset: Dataset, latents: LatentStore,
              phenotypes: list[PhenotypeSpec] | None = None) -> FittedHeads:
    """One head per (phenotype × modality condition); metrics on the test split.

    Degenerate labels (fewer than two of a class in train, or single-class
    test) skip the head and flag the column.
    """
    if ckpt.dataset_fingerprint != dataset.fingerprint:
        raise ArgumentError("checkpoint was trained on a different dataset")
    phenotypes = phenotypes or default_phenotypes()
    train_ids = dataset.split_ids("train")
    test_ids = dataset.split_ids("test")

    scaler_mean, scaler_std = {}, {}
    x_train, x_test = {}, {}
    for condition in CONDITIONS:
        origin = CONDITION_ORIGIN[condition]
        xt = latents.vectors(train_ids, origin).astype(np.float64)
        scaler_mean[condition] = xt.mean(axis=0)
        scaler_std[condition] = np.maximum(xt.std(axis=0), 1e-8)
        x_train[condition] = (xt - scaler_mean[condition]) / scaler_std[condition]
        xe = latents.vectors(test_ids, origin).astype(np.float64)
        x_test[condition] = (xe - scaler_mean[condition]) / scaler_std[condition]

    fitted = FittedHeads(phenotypes=phenotypes, scaler_mean=scaler_mean,
                         scaler_std=scaler_std)
    for spec in phenotypes:
        y_train = _phenotype_values(dataset, spec, train_ids)
        y_test = _phenotype_values(dataset, spec, test_ids)
        for condition in CONDITIONS:
            head = Head(phenotype=spec.name, condition=condition, kind=spec.kind)
            if spec.kind == "binary":
                n_pos = int(y_train.sum())
                if n_pos < 2 or n_pos > len(y_train) - 2:
                    head.skipped = True
                    head.skip_reason = "degenerate train labels"
                else:
                    w, b, _ = logistic_fit(x_train[condition], y_train)
                    head.w, head.b = w, b
                    if 0 < int(y_test.sum()) < len(y_test):
                        head.metric = auroc(head.predict(x_test[condition]), y_test)
                    else:
                        head.skip_reason = "single-class test labels"
            else:
                w, b = ridge_fit(x_train[condition], y_train)
                head.w, head.b = w, b
                head.metric = r_squared(head.predict(x_test[condition]), y_test)
            fitted.heads[(spec.name, condition)] = head
    return fitted


# -- prediction matrix ------------------------------------------------------------


@dataclass
class PredictionMatrix:
    """3×K table: rows are modality conditions, columns are phenotypes."""

    phenotypes: list[PhenotypeSpec]
    cells: list[list[float | None]]     # [condition][phenotype]
    metrics: list[list[float | None]]   # test metric per (condition, phenotype)

    rows = CONDITIONS

    def to_json(self) -> dict:
        return {
            "rows": list(CONDITIONS),
            "phenotypes": [{"name": p.name, "kind": p.kind} for p in self.phenotypes],
            "cells": self.cells,
            "metrics": self.metrics,
        }


def _matrix_from_condition_vectors(heads: FittedHeads,
                                   vec: dict[str, np.ndarray]) -> PredictionMatrix:
    cells: list[list[float | None]] = []
    metrics: list[list[float | None]] = []
    for condition in CONDITIONS:
        x = heads.standardize(condition, vec[condition].reshape(1, -1))
        row_cells: list[float | None] = []
        row_metrics: list[float | None] = []
        for spec in heads.phenotypes:
            head = heads.head(spec.name, condition)
            if head.skipped:
                row_cells.append(None)
            else:
                row_cells.append(float(head.predict(x)[0]))
            row_metrics.append(head.metric)
        cells.append(row_cells)
        metrics.append(row_metrics)
    return PredictionMatrix(phenotypes=heads.phenotypes, cells=cells, metrics=metrics)


def predict_matrix(heads: FittedHeads, latents: LatentStore,
                   group: CohortGroup) -> PredictionMatrix:
    """Predictions from the group's mean latent per condition.

    Fused uses the per-subject fused vectors averaged over the group (the
    mean commutes, but the definition is per-subject-then-mean).
    """
    vec = {
        condition: latents.vectors(group.subject_ids,
                                   CONDITION_ORIGIN[condition]).mean(axis=0)
        for condition in CONDITIONS
    }
    return _matrix_from_condition_vectors(heads, vec)


def predict_matrix_for_vector(heads: FittedHeads, z: LatentVector) -> PredictionMatrix:
    """Predictions for one latent point (perturbation/interpolation results).

    The encoders share a latent space, so the same vector feeds each
    condition's head.
    """
    values = np.asarray(z.values, dtype=np.float64)
    vec = {condition: values for condition in CONDITIONS}
    return _matrix_from_condition_vectors(heads, vec)
