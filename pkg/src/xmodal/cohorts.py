"""Cohort analytics: covariate histograms, predicate filtering, lasso
selection on 2-D embeddings, group management, and representative latents.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import (
    BOOL_COVARIATES,
    COVARIATE_SCHEMA,
    Dataset,
    SEX_CATEGORIES,
)
from .errors import ArgumentError, NotFoundError
from .model import LatentStore, LatentVector
from .tsne import Embedding2D

_SCHEMA_BY_NAME = {c["name"]: c for c in COVARIATE_SCHEMA}

REPRESENTATIVE_METHODS = ("nearest_subject", "mean", "median", "centroid")


# -- filter predicates ---------------------------------------------------------


@dataclass(frozen=True)
class FilterClause:
    """One covariate constraint: a category set or a closed numeric interval."""

    covariate: str
    categories: frozenset | None = None
    interval: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        schema = _SCHEMA_BY_NAME.get(self.covariate)
        if schema is None:
            raise ArgumentError(f"unknown covariate {self.covariate!r}")
        if (self.categories is None) == (self.interval is None):
            raise ArgumentError("clause needs exactly one of categories or interval")
        if self.interval is not None:
            if schema["kind"] != "numeric":
                raise ArgumentError(f"{self.covariate} is not numeric")
            lo, hi = self.interval
            if lo > hi:
                raise ArgumentError(f"malformed interval for {self.covariate}: {lo} > {hi}")
        else:
            if schema["kind"] == "numeric":
                raise ArgumentError(f"{self.covariate} needs an interval, not categories")
            allowed = (set(SEX_CATEGORIES) if schema["kind"] == "categorical"
                       else {"true", "false"})
            bad = set(self.categories) - allowed
            if bad:
                raise ArgumentError(f"unknown categories for {self.covariate}: {sorted(bad)}")


@dataclass(frozen=True)
class FilterPredicate:
    """AND of clauses, at most one per covariate."""

    clauses: tuple[FilterClause, ...] = ()

    def __post_init__(self) -> None:
        names = [c.covariate for c in self.clauses]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ArgumentError(f"duplicate clause for covariate(s): {sorted(dupes)}")

    @classmethod
    def from_json(cls, clauses: list[dict]) -> "FilterPredicate":
        """Build from the wire format: [{covariate, categories | interval}]."""
        parsed = []
        for c in clauses:
            if "categories" in c and c["categories"] is not None:
                cats = frozenset(str(v).lower() if isinstance(v, bool) else str(v)
                                 for v in c["categories"])
                parsed.append(FilterClause(covariate=c["covariate"], categories=cats))
            elif "interval" in c and c["interval"] is not None:
                lo, hi = c["interval"]
                parsed.append(FilterClause(covariate=c["covariate"],
                                           interval=(float(lo), float(hi))))
            else:
                raise ArgumentError("clause needs categories or interval")
        return cls(clauses=tuple(parsed))


def _clause_mask(dataset: Dataset, clause: FilterClause) -> np.ndarray:
    values = dataset.covariate_values(clause.covariate)
    if clause.interval is not None:
        lo, hi = clause.interval
        return (values >= lo) & (values <= hi)
    if clause.covariate == "sex":
        keep = np.zeros(len(dataset), dtype=bool)
        for cat in clause.categories:
            keep |= values == SEX_CATEGORIES.index(cat)
        return keep
    wanted = {"true": 1, "false": 0}
    keep = np.zeros(len(dataset), dtype=bool)
    for cat in clause.categories:
        keep |= values == wanted[cat]
    return keep


def filter_cohort(dataset: Dataset, predicate: FilterPredicate) -> np.ndarray:
    """Ids of subjects satisfying every clause, ascending."""
    mask = np.ones(len(dataset), dtype=bool)
    for clause in predicate.clauses:
        mask &= _clause_mask(dataset, clause)
    return dataset.ids[mask]


# -- histograms ----------------------------------------------------------------


def _bin_numeric(values: np.ndarray, lo: float, hi: float, width: float):
    edges = np.arange(lo, hi + width / 2, width)
    labels = [f"[{edges[i]:g}, {edges[i+1]:g}{']' if i == len(edges) - 2 else ')'}"
              for i in range(len(edges) - 1)]
    # right-inclusive last bin so the upper clamp lands inside
    idx = np.minimum(((values - lo) / width).astype(int), len(labels) - 1)
    idx = np.clip(idx, 0, len(labels) - 1)
    return labels, idx


def histogram(dataset: Dataset, selection=None) -> dict:
    """Bin counts per covariate for (all subjects, selected subjects).

    ``selection`` is an iterable of subject ids; None means everyone.
    """
    n = len(dataset)
    if selection is None:
        sel_mask = np.ones(n, dtype=bool)
    else:
        sel = np.asarray(list(selection), dtype=np.int64)
        if sel.size and (sel.min() < 0 or sel.max() >= n):
            raise ArgumentError("selection contains unknown subject ids")
        sel_mask = np.zeros(n, dtype=bool)
        sel_mask[sel] = True

    out = {}
    for schema in COVARIATE_SCHEMA:
        name = schema["name"]
        values = dataset.covariate_values(name)
        if schema["kind"] == "numeric":
            lo, hi = schema["range"]
            labels, idx = _bin_numeric(values, lo, hi, schema["bin_width"])
        elif schema["kind"] == "categorical":
            labels = list(schema["categories"])
            idx = values.astype(int)
        else:
            labels = ["false", "true"]
            idx = values.astype(int)
        all_counts = np.bincount(idx, minlength=len(labels))
        sel_counts = np.bincount(idx[sel_mask], minlength=len(labels))
        out[name] = {
            "labels": labels,
            "all": all_counts.tolist(),
            "selected": sel_counts.tolist(),
        }
    return out


# -- lasso selection -------------------------------------------------------------


def _on_segment(px, py, x1, y1, x2, y2) -> np.ndarray:
    """Vectorized exact point-on-segment test (colinear and inside the bbox)."""
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    within_x = (px >= np.minimum(x1, x2)) & (px <= np.maximum(x1, x2))
    within_y = (py >= np.minimum(y1, y2)) & (py <= np.maximum(y1, y2))
    return (cross == 0.0) & within_x & within_y


def points_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd (ray casting) membership; boundary points count as inside."""
    polygon = np.asarray(polygon, dtype=np.float64)
    if polygon.ndim != 2 or polygon.shape[1] != 2 or len(polygon) < 3:
        raise ArgumentError("polygon needs at least 3 (x, y) vertices")
    points = np.asarray(points, dtype=np.float64)
    px, py = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    boundary = np.zeros(len(points), dtype=bool)
    m = len(polygon)
    for i in range(m):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % m]
        boundary |= _on_segment(px, py, x1, y1, x2, y2)
        crosses = (y1 > py) != (y2 > py)
        if not crosses.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < x_at)
    return inside | boundary


def lasso_select(embedding: Embedding2D, polygon, subject_ids: np.ndarray) -> np.ndarray:
    """Ids whose 2-D embedding point lies inside the (implicitly closed) polygon."""
    polygon = np.asarray(polygon, dtype=np.float64)
    if polygon.ndim != 2 or polygon.shape[1] != 2 or len(polygon) < 3:
        raise ArgumentError("lasso polygon needs at least 3 vertices")
    if len(subject_ids) != len(embedding.points):
        raise ArgumentError("subject_ids must align with embedding points")
    keep = points_in_polygon(embedding.points, polygon)
    return np.asarray(subject_ids)[keep]


# -- groups -----------------------------------------------------------------------


@dataclass
class CohortGroup:
    id: str
    name: str
    subject_ids: np.ndarray  # ascending, unique
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = np.unique(np.asarray(self.subject_ids, dtype=np.int64))
        if ids.size == 0:
            raise ArgumentError("a cohort group cannot be empty")
        self.subject_ids = ids

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "provenance": self.provenance,
            "subject_ids": self.subject_ids.tolist(),
        }


class GroupRegistry:
    """In-memory named groups; single writer, concurrent readers."""

    def __init__(self, dataset: Dataset):
        self._dataset = dataset
        self._groups: dict[str, CohortGroup] = {}
        self._lock = threading.Lock()
        self._next = 1

    def create(self, name: str, subject_ids, provenance: dict | None = None) -> CohortGroup:
        ids = np.asarray(list(subject_ids), dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= len(self._dataset)):
            raise ArgumentError("group contains unknown subject ids")
        with self._lock:
            gid = f"g{self._next}"
            self._next += 1
            group = CohortGroup(id=gid, name=name, subject_ids=ids,
                                provenance=provenance or {"type": "explicit"})
            self._groups[gid] = group
        return group

    def get(self, group_id: str) -> CohortGroup:
        group = self._groups.get(group_id)
        if group is None:
            raise NotFoundError(f"unknown group id {group_id!r}")
        return group

    def all(self) -> list[CohortGroup]:
        return list(self._groups.values())

    def export_json(self, path: str | Path) -> None:
        payload = [g.to_json() for g in self.all()]
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")

    def import_json(self, path: str | Path) -> list[CohortGroup]:
        payload = json.loads(Path(path).read_text())
        out = []
        for item in payload:
            out.append(self.create(item["name"], item["subject_ids"],
                                   item.get("provenance")))
        return out


# -- representatives ---------------------------------------------------------------


def representative(latents: LatentStore, group: CohortGroup, method: str,
                   modality: str) -> tuple[LatentVector, int | None]:
    """A single latent summarizing the group.

    mean and centroid are aliases (component-wise mean); median takes the
    lower middle per dimension; nearest_subject returns the member closest to
    the centroid (ties to the smallest id) along with its id.
    """
    if method not in REPRESENTATIVE_METHODS:
        raise ArgumentError(f"method must be one of {REPRESENTATIVE_METHODS}")
    vectors = latents.vectors(group.subject_ids, modality)
    if method in ("mean", "centroid"):
        return LatentVector(values=vectors.mean(axis=0), origin=modality), None
    if method == "median":
        m = len(vectors)
        lower_middle = np.sort(vectors, axis=0)[(m - 1) // 2]
        return LatentVector(values=lower_middle, origin=modality), None
    centroid = vectors.mean(axis=0)
    dist = np.linalg.norm(vectors - centroid, axis=1)
    row = int(np.argmin(dist))  # first occurrence = smallest id (ids ascending)
    return (LatentVector(values=vectors[row], origin=modality),
            int(group.subject_ids[row]))
