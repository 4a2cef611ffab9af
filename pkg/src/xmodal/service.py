"""HTTP/JSON API binding the whole system together.

SessionState is immutable after startup except the group registry
(single-writer). Read endpoints are stateless: identical requests produce
identical bytes while the session is unchanged. Every module error surfaces
as a structured {code, message} body.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .cohorts import (
    FilterPredicate,
    GroupRegistry,
    filter_cohort,
    histogram,
    lasso_select,
    representative,
)
from .dataset import COVARIATE_SCHEMA, Dataset
from .errors import ArgumentError, ExplorerError, NotFoundError
from .latent import (
    InterpolationRequest,
    PerturbationRequest,
    interpolate,
    perturb,
    reconstruct_group,
    translate,
)
from .model import (
    LatentStore,
    LatentVector,
    MODALITIES,
    ModelCheckpoint,
    compute_latents,
)
from .predict import FittedHeads, fit_heads, predict_matrix, predict_matrix_for_vector
from .tsne import Embedding2D, TsneConfig, tsne_fit

_STATUS_BY_CODE = {
    "argument": 400,
    "dimension": 400,
    "numeric": 400,
    "contract": 409,
    "format": 400,
    "not_found": 404,
    "training": 500,
    "internal": 500,
}


@dataclass
class SessionState:
    dataset: Dataset
    checkpoint: ModelCheckpoint
    latents: LatentStore
    embeddings: dict[str, Embedding2D]
    heads: FittedHeads
    groups: GroupRegistry = field(init=False)

    def __post_init__(self) -> None:
        self.groups = GroupRegistry(self.dataset)


def build_session(dataset: Dataset, ckpt: ModelCheckpoint,
                  embeddings: dict[str, Embedding2D] | None = None,
                  tsne_config: TsneConfig | None = None) -> SessionState:
    """Wire dataset + checkpoint into a servable session.

    t-SNE layouts are computed here (once) unless precomputed embeddings are
    supplied (see the `embed` CLI subcommand).
    """
    if ckpt.dataset_fingerprint != dataset.fingerprint:
        raise ArgumentError(
            "checkpoint fingerprint does not match the loaded dataset")
    latents = compute_latents(ckpt, dataset)
    if embeddings is None:
        cfg = tsne_config or TsneConfig()
        embeddings = {
            m: tsne_fit(latents.matrices[m], cfg, source_modality=m)
            for m in MODALITIES
        }
    for m, emb in embeddings.items():
        if len(emb.points) != len(dataset):
            raise ArgumentError(f"embedding for {m!r} does not cover the dataset")
    heads = ckpt.heads or fit_heads(ckpt, dataset, latents)
    return SessionState(dataset=dataset, checkpoint=ckpt, latents=latents,
                        embeddings=embeddings, heads=heads)


# -- embeddings file (written by `embed`, consumed by `serve`) ------------------------


def save_embeddings(embeddings: dict[str, Embedding2D], dataset: Dataset,
                    path) -> None:
    import json
    from dataclasses import asdict
    from pathlib import Path

    payload = {
        "format": "xmodal-embeddings-v1",
        "dataset_fingerprint": dataset.fingerprint,
        "modalities": {
            m: {
                "points": [[float(x), float(y)] for x, y in emb.points],
                "kl_final": emb.kl_final,
                "config": asdict(emb.config),
            }
            for m, emb in embeddings.items()
        },
    }
    Path(path).write_text(json.dumps(payload) + "\n")


def load_embeddings(path, dataset: Dataset) -> dict[str, Embedding2D]:
    import json
    from pathlib import Path

    from .errors import FormatError

    payload = json.loads(Path(path).read_text())
    if payload.get("format") != "xmodal-embeddings-v1":
        raise FormatError(f"{path} is not an embeddings file")
    if payload.get("dataset_fingerprint") != dataset.fingerprint:
        raise FormatError("embeddings were computed for a different dataset")
    out = {}
    for m, data in payload["modalities"].items():
        cfg = data["config"]
        out[m] = Embedding2D(
            points=np.asarray(data["points"], dtype=np.float64),
            source_modality=m,
            config=TsneConfig(**data["config"]),
            kl_final=data["kl_final"],
        )
    return out


# -- wire helpers ------------------------------------------------------------------


def sample_payload(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype="<f4")
    return {
        "shape": list(arr.shape),
        "dtype": "float32",
        "b64": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def _vector_payload(z: LatentVector) -> dict:
    return {"values": [float(v) for v in z.values], "origin": z.origin}


def _parse_vector(body: dict | None, d: int) -> LatentVector:
    if not body or "values" not in body:
        raise ArgumentError("latent vector payload needs 'values'")
    values = np.asarray(body["values"], dtype=np.float32)
    if values.shape != (d,):
        raise ArgumentError(f"latent vector must have length {d}")
    return LatentVector(values=values, origin=body.get("origin", "synthetic"))


# -- request bodies ------------------------------------------------------------------


class FilterBody(BaseModel):
    clauses: list[dict]


class LassoBody(BaseModel):
    modality: str
    polygon: list[list[float]]


class GroupBody(BaseModel):
    name: str
    ids: list[int] | None = None
    provenance: dict | None = None


class ReconstructBody(BaseModel):
    group_id: str
    method: str = "mean"
    modalities: list[str] = ["ecg", "mri"]


class PerturbBody(BaseModel):
    base: dict
    k: int
    value: float
    modalities: list[str] = ["ecg", "mri"]


class InterpolateBody(BaseModel):
    group_a: str
    group_b: str
    t: float
    method: str = "mean"
    modalities: list[str] = ["ecg", "mri"]


class TranslateBody(BaseModel):
    subject_id: int
    from_modality: str = Field(alias="from")
    to_modality: str = Field(alias="to")

    model_config = {"populate_by_name": True}


def filter_from(session: SessionState, predicate: FilterPredicate) -> np.ndarray:
    return filter_cohort(session.dataset, predicate)


def resolve_provenance(session: SessionState, prov: dict) -> np.ndarray:
    """Evaluate a provenance payload to subject ids (filter | lasso | intersection)."""
    kind = prov.get("type")
    if kind == "filter":
        predicate = FilterPredicate.from_json(prov.get("clauses", []))
        return filter_from(session, predicate)
    if kind == "lasso":
        modality = prov.get("modality")
        if modality not in session.embeddings:
            raise ArgumentError(f"no embedding for modality {modality!r}")
        return lasso_select(session.embeddings[modality], prov.get("polygon", []),
                            session.dataset.ids)
    if kind == "intersection":
        parts = prov.get("parts", [])
        if not parts:
            raise ArgumentError("intersection provenance needs parts")
        ids = resolve_provenance(session, parts[0])
        for part in parts[1:]:
            ids = np.intersect1d(ids, resolve_provenance(session, part))
        return ids
    raise ArgumentError(f"unknown provenance type {kind!r}")


# -- app ---------------------------------------------------------------------------


def create_app(session: SessionState) -> FastAPI:
    app = FastAPI(title="cross-modal latent explorer", docs_url=None, redoc_url=None)

    @app.exception_handler(ExplorerError)
    async def explorer_error_handler(request: Request, exc: ExplorerError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse(status_code=status,
                            content={"code": exc.code, "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "argument", "message": str(exc.errors())})

    @app.exception_handler(Exception)
    async def fallback_handler(request: Request, exc: Exception):
        return JSONResponse(status_code=500,
                            content={"code": "internal", "message": str(exc)})

    @app.get("/api/summary")
    def summary():
        ds = session.dataset
        return {
            "n": len(ds),
            "seed": ds.seed,
            "split_sizes": ds.split_sizes(),
            "covariate_schema": COVARIATE_SCHEMA,
            "latent_dim": session.checkpoint.latent_dim,
            "modalities": list(MODALITIES),
            "phenotypes": [{"name": p.name, "kind": p.kind}
                           for p in session.heads.phenotypes],
            "display_range": {
                origin: [float(v) for v in session.latents.display_range(origin)]
                for origin in ("ecg", "mri", "fused")
            },
        }

    @app.get("/api/histogram")
    def histogram_endpoint(selection: str | None = None):
        if selection is None:
            ids = None
        elif selection == "":
            ids = []
        else:
            try:
                ids = [int(tok) for tok in selection.split(",")]
            except ValueError:
                raise ArgumentError("selection must be comma-separated integers")
        return histogram(session.dataset, ids)

    @app.get("/api/embedding/{modality}")
    def embedding(modality: str):
        emb = session.embeddings.get(modality)
        if emb is None:
            raise NotFoundError(f"no embedding for modality {modality!r}")
        return {
            "modality": modality,
            "ids": [int(i) for i in session.dataset.ids],
            "points": [[float(x), float(y)] for x, y in emb.points],
            "kl_final": emb.kl_final,
        }

    @app.post("/api/cohort/filter")
    def cohort_filter(body: FilterBody):
        predicate = FilterPredicate.from_json(body.clauses)
        return {"ids": [int(i) for i in filter_from(session, predicate)]}

    @app.post("/api/cohort/lasso")
    def cohort_lasso(body: LassoBody):
        emb = session.embeddings.get(body.modality)
        if emb is None:
            raise NotFoundError(f"no embedding for modality {body.modality!r}")
        ids = lasso_select(emb, body.polygon, session.dataset.ids)
        return {"ids": [int(i) for i in ids]}

    @app.post("/api/group")
    def create_group(body: GroupBody):
        if (body.ids is None) == (body.provenance is None):
            raise ArgumentError("provide exactly one of ids or provenance")
        if body.ids is not None:
            ids = body.ids
            provenance = {"type": "explicit"}
        else:
            ids = resolve_provenance(session, body.provenance)
            provenance = body.provenance
        group = session.groups.create(body.name, ids, provenance)
        return {"group_id": group.id, "size": int(len(group.subject_ids))}

    @app.post("/api/reconstruct")
    def reconstruct(body: ReconstructBody):
        group = session.groups.get(body.group_id)
        vector, subject_id, samples = reconstruct_group(
            session.checkpoint, session.dataset, session.latents,
            group, body.method, tuple(body.modalities))
        matrix = predict_matrix(session.heads, session.latents, group)
        return {
            "group_id": group.id,
            "vector": _vector_payload(vector),
            "subject_id": subject_id,
            "samples": {m: sample_payload(s) for m, s in samples.items()},
            "matrix": matrix.to_json(),
        }

    @app.post("/api/perturb")
    def perturb_endpoint(body: PerturbBody):
        base = _parse_vector(body.base, session.checkpoint.latent_dim)
        req = PerturbationRequest(base=base, dimension=body.k, new_value=body.value)
        vector, pairs = perturb(session.checkpoint, session.latents, req,
                                tuple(body.modalities))
        matrix = predict_matrix_for_vector(session.heads, vector)
        return {
            "vector": _vector_payload(vector),
            "original": {m: sample_payload(pair[0]) for m, pair in pairs.items()},
            "perturbed": {m: sample_payload(pair[1]) for m, pair in pairs.items()},
            "matrix": matrix.to_json(),
        }

    @app.post("/api/interpolate")
    def interpolate_endpoint(body: InterpolateBody):
        group_a = session.groups.get(body.group_a)
        group_b = session.groups.get(body.group_b)
        z_a, _ = representative(session.latents, group_a, body.method, "fused")
        z_b, _ = representative(session.latents, group_b, body.method, "fused")
        req = InterpolationRequest(z_a=z_a, z_b=z_b, t=body.t)
        vector, samples = interpolate(session.checkpoint, req, tuple(body.modalities))
        matrix = predict_matrix_for_vector(session.heads, vector)
        return {
            "vector": _vector_payload(vector),
            "samples": {m: sample_payload(s) for m, s in samples.items()},
            "matrix": matrix.to_json(),
        }

    @app.post("/api/translate")
    def translate_endpoint(body: TranslateBody):
        subject = session.dataset.subject(body.subject_id)
        sample = subject.ecg if body.from_modality == "ecg" else subject.mri
        out = translate(session.checkpoint, sample, body.from_modality,
                        body.to_modality)
        return {"subject_id": subject.id, "modality": body.to_modality,
                "sample": sample_payload(out)}

    @app.get("/api/subject/{subject_id}")
    def subject(subject_id: int):
        s = session.dataset.subject(subject_id)
        return {
            "id": s.id,
            "split": s.split,
            "covariates": {
                "age": s.covariates.age,
                "bmi": s.covariates.bmi,
                "sex": s.covariates.sex,
                "atrial_fibrillation": s.covariates.atrial_fibrillation,
                "coronary_artery_disease": s.covariates.coronary_artery_disease,
                "diabetes_type2": s.covariates.diabetes_type2,
                "hypertension": s.covariates.hypertension,
                "hypertrophic_cardiomyopathy": s.covariates.hypertrophic_cardiomyopathy,
            },
            "factors": {
                "heart_scale": s.factors.heart_scale,
                "heart_rate": s.factors.heart_rate,
                "wall_thickness": s.factors.wall_thickness,
            },
            "mri": sample_payload(s.mri),
            "ecg": sample_payload(s.ecg),
        }

    return app
