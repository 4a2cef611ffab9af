"""Shared fixtures: one desk-scale cohort and one trained model per session.

Training takes a few minutes; set XMODAL_TEST_CACHE to a directory to reuse
the checkpoint across local runs (keyed by dataset fingerprint, with the
original training wall time recorded so timing assertions stay honest).
"""

import json
import os
import time
from pathlib import Path

import pytest

from xmodal.checkpoint import load_checkpoint, save_checkpoint
from xmodal.model import TrainConfig, compute_latents, train
from xmodal.predict import fit_heads
from xmodal.synth import generate_cohort

DESK_N = 2000
DESK_DATASET_SEED = 7
DESK_TRAIN_CONFIG = TrainConfig(max_epochs=200, patience=200, seed=0)


@pytest.fixture(scope="session")
def desk_dataset():
    return generate_cohort(DESK_N, seed=DESK_DATASET_SEED)


@pytest.fixture(scope="session")
def desk_model(desk_dataset):
    """(checkpoint with fitted heads, training wall-clock seconds)."""
    cache_dir = os.environ.get("XMODAL_TEST_CACHE")
    ckpt_path = meta_path = None
    if cache_dir:
        base = Path(cache_dir)
        base.mkdir(parents=True, exist_ok=True)
        tag = desk_dataset.fingerprint[:16]
        ckpt_path = base / f"desk-{tag}.ckpt"
        meta_path = base / f"desk-{tag}.json"
        if ckpt_path.exists() and meta_path.exists():
            ckpt = load_checkpoint(ckpt_path)
            if (ckpt.config == DESK_TRAIN_CONFIG
                    and ckpt.dataset_fingerprint == desk_dataset.fingerprint):
                return ckpt, json.loads(meta_path.read_text())["train_seconds"]

    t0 = time.time()
    ckpt = train(desk_dataset, DESK_TRAIN_CONFIG)
    train_seconds = time.time() - t0
    store = compute_latents(ckpt, desk_dataset)
    ckpt.heads = fit_heads(ckpt, desk_dataset, store)
    if ckpt_path is not None:
        save_checkpoint(ckpt, ckpt_path)
        meta_path.write_text(json.dumps({"train_seconds": train_seconds}))
    return ckpt, train_seconds


@pytest.fixture(scope="session")
def desk_checkpoint(desk_model):
    return desk_model[0]


@pytest.fixture(scope="session")
def desk_latents(desk_checkpoint, desk_dataset):
    return compute_latents(desk_checkpoint, desk_dataset)


@pytest.fixture(scope="session")
def desk_session(desk_checkpoint, desk_dataset):
    """Servable session; embeddings use a shortened t-SNE schedule (the
    latency and linking tests do not depend on layout quality)."""
    from xmodal.service import build_session, load_embeddings, save_embeddings
    from xmodal.tsne import TsneConfig

    cfg = TsneConfig(iterations=300, seed=0)
    embeddings = None
    cache_dir = os.environ.get("XMODAL_TEST_CACHE")
    emb_path = None
    if cache_dir:
        emb_path = Path(cache_dir) / f"emb-{desk_dataset.fingerprint[:16]}.json"
        if emb_path.exists():
            try:
                embeddings = load_embeddings(emb_path, desk_dataset)
            except Exception:
                embeddings = None
    session = build_session(desk_dataset, desk_checkpoint, embeddings=embeddings,
                            tsne_config=cfg)
    if emb_path is not None and embeddings is None:
        save_embeddings(session.embeddings, desk_dataset, emb_path)
    return session
