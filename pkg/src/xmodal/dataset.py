"""Subject records, the in-memory cohort container, and its on-disk format.

A dataset directory holds ``manifest.json`` (counts, seed, split sizes,
covariate schema, integrity hash) and ``subjects.bin`` (packed little-endian
records). The record layout is fixed and unaligned, so files are bit-exact
across platforms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, FormatError, NotFoundError

MRI_SHAPE = (32, 32)
ECG_SHAPE = (4, 256)
SAMPLE_SIZE = 1024  # both modalities flatten to this

SPLIT_NAMES = ("train", "validation", "test")
SEX_CATEGORIES = ("female", "male")

BOOL_COVARIATES = (
    "atrial_fibrillation",
    "coronary_artery_disease",
    "diabetes_type2",
    "hypertension",
    "hypertrophic_cardiomyopathy",
)

# Single source of truth for covariate handling in histograms, filters and
# the HTTP summary endpoint.
COVARIATE_SCHEMA = [
    {"name": "age", "kind": "numeric", "range": [40.0, 80.0], "bin_width": 5.0},
    {"name": "bmi", "kind": "numeric", "range": [15.0, 50.0], "bin_width": 2.5},
    {"name": "sex", "kind": "categorical", "categories": list(SEX_CATEGORIES)},
] + [{"name": name, "kind": "boolean"} for name in BOOL_COVARIATES]

COVARIATE_NAMES = tuple(c["name"] for c in COVARIATE_SCHEMA)

# field name in the packed record for each boolean covariate
_BOOL_FIELDS = {
    "atrial_fibrillation": "af",
    "coronary_artery_disease": "cad",
    "diabetes_type2": "t2d",
    "hypertension": "htn",
    "hypertrophic_cardiomyopathy": "hcm",
}

RECORD_DTYPE = np.dtype([
    ("id", "<u8"),
    ("age", "<f4"),
    ("bmi", "<f4"),
    ("sex", "u1"),
    ("af", "u1"),
    ("cad", "u1"),
    ("t2d", "u1"),
    ("htn", "u1"),
    ("hcm", "u1"),
    ("split", "u1"),
    ("heart_scale", "<f4"),
    ("heart_rate", "<f4"),
    ("wall_thickness", "<f4"),
    ("noise_seed", "<u8"),
    ("mri", "<f4", (SAMPLE_SIZE,)),
    ("ecg", "<f4", (SAMPLE_SIZE,)),
])

MANIFEST_FORMAT = "xmodal-dataset-v1"
MANIFEST_NAME = "manifest.json"
SUBJECTS_NAME = "subjects.bin"


@dataclass(frozen=True)
class GroundTruthFactors:
    """Generative factors behind one subject's paired samples."""

    heart_scale: float
    heart_rate: float
    wall_thickness: float
    noise_seed: int

    def __post_init__(self) -> None:
        # tolerance covers float32 rounding of clipped boundary values
        eps = 1e-6
        if not 0.5 - eps <= self.heart_scale <= 1.5 + eps:
            raise ArgumentError(f"heart_scale {self.heart_scale} outside [0.5, 1.5]")
        if not 45.0 - eps <= self.heart_rate <= 110.0 + eps:
            raise ArgumentError(f"heart_rate {self.heart_rate} outside [45, 110]")
        if not 0.05 - eps <= self.wall_thickness <= 0.25 + eps:
            raise ArgumentError(f"wall_thickness {self.wall_thickness} outside [0.05, 0.25]")
        if not 0 <= self.noise_seed < 2 ** 64:
            raise ArgumentError("noise_seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class CovariateRecord:
    age: float
    bmi: float
    sex: str
    atrial_fibrillation: bool
    coronary_artery_disease: bool
    diabetes_type2: bool
    hypertension: bool
    hypertrophic_cardiomyopathy: bool

    def __post_init__(self) -> None:
        if self.sex not in SEX_CATEGORIES:
            raise ArgumentError(f"sex must be one of {SEX_CATEGORIES}")
        if not 40.0 <= self.age <= 80.0:
            raise ArgumentError(f"age {self.age} outside [40, 80]")
        if not 15.0 <= self.bmi <= 50.0:
            raise ArgumentError(f"bmi {self.bmi} outside [15, 50]")


@dataclass(frozen=True)
class SubjectRecord:
    """One synthetic individual, materialized from the column store."""

    id: int
    covariates: CovariateRecord
    factors: GroundTruthFactors
    mri: np.ndarray  # (32, 32) float32 in [0, 1]
    ecg: np.ndarray  # (4, 256) float32 in [-2, 2]
    split: str


class Dataset:
    """Column-oriented cohort; indexable as a sequence of SubjectRecord."""

    def __init__(self, records: np.ndarray, seed: int):
        if records.dtype != RECORD_DTYPE:
            raise FormatError("records array does not use the dataset record dtype")
        self._rec = records
        self.seed = int(seed)
        self._fingerprint: str | None = None

    # -- basics ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._rec)

    def __iter__(self):
        for i in range(len(self)):
            yield self.subject(int(self._rec["id"][i]))

    def __getitem__(self, i: int) -> SubjectRecord:
        return self.subject(int(self._rec["id"][i]))

    @property
    def ids(self) -> np.ndarray:
        return self._rec["id"]

    @property
    def mri(self) -> np.ndarray:
        """All MRI samples, flat [N, 1024]."""
        return self._rec["mri"]

    @property
    def ecg(self) -> np.ndarray:
        return self._rec["ecg"]

    @property
    def split_codes(self) -> np.ndarray:
        return self._rec["split"]

    def sample_matrix(self, modality: str) -> np.ndarray:
        if modality == "mri":
            return self.mri
        if modality == "ecg":
            return self.ecg
        raise ArgumentError(f"unknown modality {modality!r}")

    def subject(self, subject_id: int) -> SubjectRecord:
        if not 0 <= subject_id < len(self):
            raise NotFoundError(f"subject id {subject_id} not in dataset")
        r = self._rec[subject_id]
        cov = CovariateRecord(
            age=float(r["age"]),
            bmi=float(r["bmi"]),
            sex=SEX_CATEGORIES[int(r["sex"])],
            atrial_fibrillation=bool(r["af"]),
            coronary_artery_disease=bool(r["cad"]),
            diabetes_type2=bool(r["t2d"]),
            hypertension=bool(r["htn"]),
            hypertrophic_cardiomyopathy=bool(r["hcm"]),
        )
        factors = GroundTruthFactors(
            heart_scale=float(r["heart_scale"]),
            heart_rate=float(r["heart_rate"]),
            wall_thickness=float(r["wall_thickness"]),
            noise_seed=int(r["noise_seed"]),
        )
        return SubjectRecord(
            id=int(r["id"]),
            covariates=cov,
            factors=factors,
            mri=r["mri"].reshape(MRI_SHAPE),
            ecg=r["ecg"].reshape(ECG_SHAPE),
            split=SPLIT_NAMES[int(r["split"])],
        )

    # -- covariate access ----------------------------------------------------

    def covariate_values(self, name: str) -> np.ndarray:
        """Raw column for one covariate: floats, sex codes, or 0/1 flags."""
        if name in ("age", "bmi"):
            return self._rec[name]
        if name == "sex":
            return self._rec["sex"]
        if name in _BOOL_FIELDS:
            return self._rec[_BOOL_FIELDS[name]]
        raise ArgumentError(f"unknown covariate {name!r}")

    def factor_values(self, name: str) -> np.ndarray:
        if name not in ("heart_scale", "heart_rate", "wall_thickness"):
            raise ArgumentError(f"unknown factor {name!r}")
        return self._rec[name]

    # -- splits --------------------------------------------------------------

    def split_ids(self, name: str) -> np.ndarray:
        if name not in SPLIT_NAMES:
            raise ArgumentError(f"unknown split {name!r}")
        code = SPLIT_NAMES.index(name)
        return self._rec["id"][self._rec["split"] == code]

    def split_sizes(self) -> dict[str, int]:
        return {name: int((self._rec["split"] == i).sum()) for i, name in enumerate(SPLIT_NAMES)}

    # -- integrity -------------------------------------------------------------

    @property
    def fingerprint(self) -> str:
        """sha256 over the packed records; binds checkpoints to datasets."""
        if self._fingerprint is None:
            self._fingerprint = hashlib.sha256(self._rec.tobytes()).hexdigest()
        return self._fingerprint

    # -- persistence -------------------------------------------------------------

    def manifest(self) -> dict:
        return {
            "format": MANIFEST_FORMAT,
            "n": len(self),
            "seed": self.seed,
            "split_sizes": self.split_sizes(),
            "covariate_schema": COVARIATE_SCHEMA,
            "record_fields": [
                {"name": name, "dtype": str(RECORD_DTYPE[name])}
                for name in RECORD_DTYPE.names
            ],
            "subjects_sha256": self.fingerprint,
        }

    def save(self, out_dir: str | Path) -> Path:
        """Write manifest.json + subjects.bin; returns the directory path."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / SUBJECTS_NAME).write_bytes(self._rec.tobytes())
        with open(out / MANIFEST_NAME, "w") as f:
            json.dump(self.manifest(), f, indent=2, sort_keys=True)
            f.write("\n")
        return out

    @classmethod
    def load(cls, in_dir: str | Path) -> "Dataset":
        src = Path(in_dir)
        manifest_path = src / MANIFEST_NAME
        subjects_path = src / SUBJECTS_NAME
        if not manifest_path.exists() or not subjects_path.exists():
            raise FormatError(f"{src} is not a dataset directory")
        with open(manifest_path) as f:
            manifest = json.load(f)
        if manifest.get("format") != MANIFEST_FORMAT:
            raise FormatError(f"unsupported dataset format {manifest.get('format')!r}")
        raw = subjects_path.read_bytes()
        if len(raw) % RECORD_DTYPE.itemsize != 0:
            raise FormatError("subjects.bin length is not a whole number of records")
        records = np.frombuffer(raw, dtype=RECORD_DTYPE).copy()
        if len(records) != manifest["n"]:
            raise FormatError(
                f"manifest says {manifest['n']} subjects, file holds {len(records)}"
            )
        ds = cls(records, seed=manifest["seed"])
        if manifest.get("subjects_sha256") != ds.fingerprint:
            raise FormatError("subjects.bin does not match the manifest hash")
        return ds
