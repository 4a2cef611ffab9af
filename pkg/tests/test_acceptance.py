"""Acceptance suite: every primary criterion at its stated tolerance.

Each test prints one PASS/FAIL line (visible with `pytest -s` or `-rA`).
The desk-scale model fixture is shared across the suite; its training time is
measured where it actually ran.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from xmodal.cohorts import (
    CohortGroup,
    FilterPredicate,
    filter_cohort,
    points_in_polygon,
)
from xmodal.latent import InterpolationRequest, interpolate
from xmodal.model import LatentVector, contrastive_loss
from xmodal.nn import mlp_backward, mlp_forward
from xmodal.predict import auroc, auroc_permutation_null, CONDITIONS
from xmodal.service import create_app
from xmodal.synth import PREVALENCE_TARGETS, generate_cohort, mri_bright_area, split_counts
from xmodal.tsne import TsneConfig, conditional_affinities, kl_divergence_and_grad, tsne_fit


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_split_fidelity():
    t0 = time.time()
    big = generate_cohort(37774, seed=1)
    elapsed = time.time() - t0
    big_ok = big.split_sizes() == {"train": 26328, "validation": 7639, "test": 3807}
    small_ok = split_counts(2000) == {"train": 1394, "validation": 404, "test": 202}
    _report(
        "split-fidelity",
        big_ok and small_ok and elapsed < 10.0,
        f"37774 -> {big.split_sizes()}, 2000 -> {split_counts(2000)}, "
        f"generation {elapsed:.1f}s (< 10s)",
    )


def test_covariate_calibration(desk_dataset):
    n = len(desk_dataset)
    failures = []
    details = []
    for name, p in PREVALENCE_TARGETS.items():
        count = int(desk_dataset.covariate_values(name).sum())
        sigma = math.sqrt(n * p * (1 - p))
        lo, hi = n * p - 4 * sigma, n * p + 4 * sigma
        details.append(f"{name}={count} in [{lo:.0f}, {hi:.0f}]")
        if not lo <= count <= hi:
            failures.append(name)
    females = int((desk_dataset.covariate_values("sex") == 0).sum())
    sigma = math.sqrt(n * 0.5161 * (1 - 0.5161))
    if not n * 0.5161 - 4 * sigma <= females <= n * 0.5161 + 4 * sigma:
        failures.append("sex")
    htn = int(desk_dataset.covariate_values("hypertension").sum())
    if not 560 <= htn <= 668:  # 30.73% of 2000 ± 4 binomial sigmas
        failures.append("hypertension-window")
    _report("covariate-calibration", not failures,
            "; ".join(details) + f"; females={females}")


def test_training_effectiveness(desk_model):
    ckpt, train_seconds = desk_model
    ratio = ckpt.validation_loss_at_best / ckpt.val_history[0]
    invariant = ckpt.validation_loss_at_best <= min(ckpt.val_history)
    _report(
        "training-effectiveness",
        train_seconds < 600.0 and ratio < 0.5 and invariant,
        f"trained in {train_seconds:.0f}s (< 600s), final/initial validation "
        f"loss {ratio:.3f} (< 0.5), early-stopping invariant {invariant}",
    )


def test_cross_modal_alignment(desk_latents, desk_dataset):
    ids = desk_dataset.split_ids("test")
    ze = desk_latents.vectors(ids, "ecg")
    zm = desk_latents.vectors(ids, "mri")
    ue = ze / np.linalg.norm(ze, axis=1, keepdims=True)
    um = zm / np.linalg.norm(zm, axis=1, keepdims=True)
    s = ue @ um.T
    paired = np.diag(s)
    mismatched = (s.sum(axis=1) - paired) / (len(ids) - 1)
    gap = float(paired.mean() - mismatched.mean())
    top1 = float(np.mean([
        (s[b:b + 100, b:b + 100].argmax(axis=1) == np.arange(100)).mean()
        for b in (0, 100)
    ]))
    _report("cross-modal-alignment", gap >= 0.2 and top1 >= 0.20,
            f"cosine gap {gap:.3f} (>= 0.2), top-1@100 {top1:.3f} (>= 0.20)")


def _mlp_gradient_worst_error(n_instances=100) -> float:
    from xmodal.nn import MlpSpec, init_weights

    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(n_instances):
        depth = rng.integers(2, 4)
        widths = [int(rng.integers(1, 5)) for _ in range(depth + 1)]
        act = ["relu", "tanh", "identity"][rng.integers(0, 3)]
        spec = MlpSpec.make(widths, act, seed=int(rng.integers(1 << 30)))
        weights = [(rng.standard_normal(w.shape), rng.standard_normal(b.shape))
                   for w, b in init_weights(spec, dtype=np.float64)]
        b_sz = int(rng.integers(1, 4))
        x = rng.standard_normal((b_sz, widths[0]))
        target = rng.standard_normal((b_sz, widths[-1]))
        out, cache = mlp_forward(spec, weights, x)
        grads, _ = mlp_backward(cache, 2.0 * (out - target))

        def loss_of(wlist):
            o, _ = mlp_forward(spec, wlist, x)
            return float(((o - target) ** 2).sum())

        h = 1e-3
        for li, (w, b) in enumerate(weights):
            for arr, g in ((w, grads[li][0]), (b, grads[li][1])):
                flat = arr.ravel()
                gflat = g.ravel()
                for j in range(flat.size):
                    orig = flat[j]
                    flat[j] = orig + h
                    up = loss_of(weights)
                    flat[j] = orig - h
                    down = loss_of(weights)
                    flat[j] = orig
                    fd = (up - down) / (2 * h)
                    worst = max(worst, abs(gflat[j] - fd) / max(abs(fd), 1e-8))
    return worst


def _tsne_gradient_worst_error(n_instances=100) -> float:
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(n_instances):
        x = rng.standard_normal((8, 4))
        p = conditional_affinities(x, perplexity=2.0)
        y = rng.standard_normal((8, 2)) * 0.7
        _, grad = kl_divergence_and_grad(p, y)
        h = 1e-6
        for i in range(8):
            for j in range(2):
                up, down = y.copy(), y.copy()
                up[i, j] += h
                down[i, j] -= h
                fd = (kl_divergence_and_grad(p, up)[0]
                      - kl_divergence_and_grad(p, down)[0]) / (2 * h)
                worst = max(worst, abs(grad[i, j] - fd) / max(abs(fd), 1e-8))
    return worst


def test_gradient_suite():
    mlp_err = _mlp_gradient_worst_error(100)
    tsne_err = _tsne_gradient_worst_error(100)
    closed_form = math.log(1.0 + math.exp(-1.0))
    nce = contrastive_loss(np.eye(2), np.eye(2), temperature=1.0)
    nce_ok = abs(nce - closed_form) <= 1e-6
    _report(
        "gradient-suite",
        mlp_err < 1e-3 and tsne_err < 1e-3 and nce_ok,
        f"MLP worst rel err {mlp_err:.2e} (< 1e-3), t-SNE worst rel err "
        f"{tsne_err:.2e} (< 1e-3), InfoNCE B=2 |{nce:.8f} - log(1+e^-1)| <= 1e-6",
    )


def test_usage_scenario_reproduction(desk_checkpoint, desk_latents, desk_dataset):
    females = filter_cohort(desk_dataset, FilterPredicate.from_json(
        [{"covariate": "sex", "categories": ["female"]}]))
    males = filter_cohort(desk_dataset, FilterPredicate.from_json(
        [{"covariate": "sex", "categories": ["male"]}]))
    z_f = LatentVector(desk_latents.vectors(females, "fused").mean(axis=0), origin="fused")
    z_m = LatentVector(desk_latents.vectors(males, "fused").mean(axis=0), origin="fused")
    areas = []
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        _, samples = interpolate(desk_checkpoint,
                                 InterpolationRequest(z_a=z_f, z_b=z_m, t=t), ("mri",))
        areas.append(mri_bright_area(samples["mri"]))
    direction_ok = areas[-1] > areas[0]
    total_range = max(areas) - min(areas)
    worst_inv = max(max(0, areas[i] - areas[i + 1]) for i in range(len(areas) - 1))
    monotone_ok = worst_inv <= 0.02 * total_range
    _report(
        "usage-scenario",
        direction_ok and monotone_ok,
        f"female->male areas {areas} (male larger: {direction_ok}; "
        f"worst inversion {worst_inv} <= 2% of range {total_range})",
    )


def test_downstream_matrix(desk_checkpoint, desk_latents, desk_dataset):
    heads = desk_checkpoint.heads
    gaps = []
    violations = []
    for spec in heads.phenotypes:
        metrics = {}
        usable = True
        for condition in CONDITIONS:
            head = heads.head(spec.name, condition)
            if head.skipped or head.metric is None:
                usable = False
                break
            metrics[condition] = head.metric
        if not usable:
            continue
        fused = metrics["ecg_and_mri"]
        best_single = max(metrics["ecg_only"], metrics["mri_only"])
        gaps.append(f"{spec.name}: fused {fused:.3f} vs best-single {best_single:.3f}")
        if fused < best_single - 0.05:
            violations.append(spec.name)

    head = heads.head("hypertension", "ecg_and_mri")
    test_ids = desk_dataset.split_ids("test")
    x = heads.standardize("ecg_and_mri",
                          desk_latents.vectors(test_ids, "fused").astype(np.float64))
    scores = head.predict(x)
    labels = desk_dataset.covariate_values("hypertension")[
        np.searchsorted(desk_dataset.ids, test_ids)]
    observed = auroc(scores, labels)
    null_mean, null_std = auroc_permutation_null(scores, labels,
                                                 n_permutations=300, seed=1)
    z = (observed - null_mean) / null_std
    _report(
        "downstream-matrix",
        not violations and z >= 5.0,
        f"{'; '.join(gaps)}; hypertension AUROC {observed:.3f} vs null "
        f"{null_mean:.3f}±{null_std:.3f} (z={z:.1f} >= 5)",
    )


def _oracle_point_in_polygon(point, polygon):
    x, y = point
    m = len(polygon)
    inside = False
    for i in range(m):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % m]
        if ((x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)) == 0.0:
            if min(x1, x2) <= x <= max(x1, x2) and min(y1, y2) <= y <= max(y1, y2):
                return True
        if (y1 > y) != (y2 > y):
            if x < x1 + (y - y1) * (x2 - x1) / (y2 - y1):
                inside = not inside
    return inside


def test_geometry_oracles():
    rng = np.random.default_rng(42)
    mismatches = 0
    checked = 0
    while checked < 1000:
        m = int(rng.integers(3, 9))
        poly = rng.uniform(-1, 1, size=(m, 2))
        pts = rng.uniform(-1.2, 1.2, size=(10, 2))
        got = points_in_polygon(pts, poly)
        want = np.array([_oracle_point_in_polygon(p, poly) for p in pts])
        mismatches += int((got != want).sum())
        checked += len(pts)

    centers = np.zeros((2, 16))
    centers[1, 0] = 10.0
    x = np.vstack([
        centers[0] + rng.standard_normal((30, 16)),
        centers[1] + rng.standard_normal((30, 16)),
    ])
    truth = np.array([0] * 30 + [1] * 30)
    emb = tsne_fit(x, TsneConfig(perplexity=10.0, seed=1))
    pts = emb.points
    d = ((pts[:, None] - pts[None]) ** 2).sum(-1)
    i, j = np.unravel_index(np.argmax(d), d.shape)
    c = pts[[i, j]].copy()
    for _ in range(100):
        labels = ((pts[:, None] - c[None]) ** 2).sum(-1).argmin(1)
        new = np.array([pts[labels == k].mean(0) if (labels == k).any() else c[k]
                        for k in range(2)])
        if np.allclose(new, c):
            break
        c = new
    agreement = max((labels == truth).mean(), (labels != truth).mean())
    _report(
        "geometry-oracles",
        mismatches == 0 and agreement >= 0.95,
        f"lasso {checked} random cases, {mismatches} mismatches; "
        f"two-cluster agreement {agreement:.3f} (>= 0.95)",
    )


def test_service_responsiveness(desk_session):
    client = TestClient(create_app(desk_session), raise_server_exceptions=False)
    females = filter_cohort(desk_session.dataset, FilterPredicate.from_json(
        [{"covariate": "sex", "categories": ["female"]}]))
    males = filter_cohort(desk_session.dataset, FilterPredicate.from_json(
        [{"covariate": "sex", "categories": ["male"]}]))
    ga = client.post("/api/group", json={"name": "acc-f", "ids": [int(i) for i in females]}).json()["group_id"]
    gb = client.post("/api/group", json={"name": "acc-m", "ids": [int(i) for i in males]}).json()["group_id"]
    base = desk_session.latents.matrices["fused"][0]
    requests = {
        "perturb": ("/api/perturb", {
            "base": {"values": [float(v) for v in base], "origin": "fused"},
            "k": 0, "value": 0.0, "modalities": ["ecg", "mri"]}),
        "interpolate": ("/api/interpolate", {
            "group_a": ga, "group_b": gb, "t": 0.5, "modalities": ["ecg", "mri"]}),
        "reconstruct": ("/api/reconstruct", {
            "group_id": ga, "method": "mean", "modalities": ["ecg", "mri"]}),
    }
    p95s = {}
    for name, (path, body) in requests.items():
        client.post(path, json=body)
        times = []
        for _ in range(50):
            t0 = time.perf_counter()
            r = client.post(path, json=body)
            times.append(time.perf_counter() - t0)
            assert r.status_code == 200
        p95s[name] = float(np.percentile(times, 95))
    _report(
        "service-responsiveness",
        all(v < 0.100 for v in p95s.values()),
        "p95 " + ", ".join(f"{k}={v * 1000:.1f}ms" for k, v in p95s.items()) + " (< 100ms)",
    )
