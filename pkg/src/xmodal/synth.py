"""Deterministic synthetic cohort: paired MRI-like images and ECG-like traces.

Every subject is driven by three ground-truth factors (heart_scale,
heart_rate, wall_thickness) plus a per-subject noise seed. Covariates are
drawn to match the published prevalence targets, and diseases causally shift
the factors, so cohort-level structure (sex ↔ heart size, hypertension ↔ wall
thickness, ...) is real and checkable against ground truth.

The heavy rendering paths are vectorized over subjects; per-subject noise
comes from counter-based Philox streams keyed by noise_seed, so a record's
samples are reproducible in isolation.
"""

from __future__ import annotations

import numpy as np

from .dataset import (
    Dataset,
    GroundTruthFactors,
    RECORD_DTYPE,
    SAMPLE_SIZE,
)
from .errors import ArgumentError

# -- population targets -------------------------------------------------------

P_FEMALE = 0.5161

# overall prevalence target, male-conditional rate; the female rate is solved
# so the marginal is exact
_DISEASES = {
    "af": (0.0353, 0.044),
    "cad": (0.0352, 0.045),
    "t2d": (0.0420, 0.059),
    "htn": (0.3073, 0.350),
    "hcm": (0.0009, 0.0009),
}

PREVALENCE_TARGETS = {
    "atrial_fibrillation": 0.0353,
    "coronary_artery_disease": 0.0352,
    "diabetes_type2": 0.0420,
    "hypertension": 0.3073,
    "hypertrophic_cardiomyopathy": 0.0009,
}


def _female_rate(overall: float, male_rate: float) -> float:
    return (overall - (1.0 - P_FEMALE) * male_rate) / P_FEMALE


# IQR of a normal is 2 * 0.67449 * sigma
_IQR_TO_SD = 1.0 / 1.34898

AGE_MEAN, AGE_SD = 65.0, (70.0 - 58.0) * _IQR_TO_SD
BMI_MEAN, BMI_SD = 25.98, (28.78 - 23.62) * _IQR_TO_SD

HEART_SCALE_MEAN = {"female": 0.90, "male": 1.15}
HEART_SCALE_SD = 0.10
WALL_MEAN, WALL_SD = 0.11, 0.02
RATE_MEAN, RATE_SD = 68.0, 9.0

# additive factor shifts per disease
AF_SCALE_SHIFT, AF_RATE_SHIFT = 0.08, 10.0
CAD_SCALE_SHIFT, CAD_RATE_SHIFT = 0.04, 6.0
T2D_WALL_SHIFT, T2D_RATE_SHIFT = 0.02, 5.0
HTN_WALL_SHIFT = 0.05
HCM_WALL_SHIFT = 0.08

AF_RHYTHM_JITTER = 0.18

SPLIT_FRACTIONS = ((6970, "train"), (2022, "validation"), (1008, "test"))

NOISE_SIGMA = 0.02

# -- MRI rendering -------------------------------------------------------------

_MRI_N = 32
_BLOOD_A, _BLOOD_B = 6.5, 5.0        # blood-pool semi-axes in px at scale 1
_WALL_PX_PER_UNIT = 22.0             # wall_thickness -> ring width in px
_EDGE_K = 8.0                        # sigmoid sharpness in normalized radius
_BG, _RING_STEP, _BLOOD_STEP = 0.06, 0.26, 0.60

# -- ECG rendering -------------------------------------------------------------

ECG_FS = 64.0
ECG_SAMPLES = 256
ECG_LEADS = 4
ECG_DURATION = ECG_SAMPLES / ECG_FS  # 4 s

# (offset as fraction of beat interval, width in seconds, base amplitude)
_WAVES = np.array([
    [0.150, 0.040, 0.17],   # P
    [0.280, 0.014, -0.12],  # Q
    [0.315, 0.018, 1.00],   # R
    [0.350, 0.014, -0.25],  # S
    [0.570, 0.060, 0.33],   # T
])
_QRS = np.array([False, True, True, True, False])

_LEAD_SIGNATURE = np.array([
    [1.00, 1.00, 1.00, 1.00, 1.00],
    [0.70, 0.90, 0.85, 0.90, 0.60],
    [0.50, -0.60, -0.70, -0.50, -0.40],
    [0.80, 0.80, 1.10, 1.20, 0.90],
])

_N_BEAT_SLOTS = 20  # covers the fastest jittered rhythm over the trace window


def _noise_rng(noise_seed: int, stream: int) -> np.random.Generator:
    """Independent per-subject stream; counter-based so creation is cheap."""
    bg = np.random.Philox(counter=[0, 0, stream, 0], key=noise_seed & (2 ** 64 - 1))
    return np.random.Generator(bg)


def _mri_clean(scale: np.ndarray, wall: np.ndarray,
               rate: np.ndarray | None = None) -> np.ndarray:
    """Noise-free concentric-ellipse renderings, [n, 1024] float32.

    The bright blood pool scales with heart_scale alone (area ∝ scale²); the
    mid-gray myocardial ring grows outward with wall_thickness; faster hearts
    blur the edges (single-frame motion artifact), which keeps heart_rate
    weakly visible in the static image.
    """
    scale = np.clip(np.asarray(scale, dtype=np.float32), 0.5, 1.5)
    wall = np.clip(np.asarray(wall, dtype=np.float32), 0.05, 0.25)
    if rate is None:
        rate = np.full_like(scale, 68.0)
    rate = np.clip(np.asarray(rate, dtype=np.float32), 45.0, 110.0)
    coords = (np.arange(_MRI_N, dtype=np.float32) - (_MRI_N - 1) / 2.0)
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    xx = xx.ravel()[None, :]
    yy = yy.ravel()[None, :]
    a_in = (_BLOOD_A * scale)[:, None].astype(np.float32)
    b_in = (_BLOOD_B * scale)[:, None].astype(np.float32)
    w_px = (_WALL_PX_PER_UNIT * wall)[:, None].astype(np.float32)
    r_in = np.sqrt((xx / a_in) ** 2 + (yy / b_in) ** 2)
    r_out = np.sqrt((xx / (a_in + w_px)) ** 2 + (yy / (b_in + w_px)) ** 2)
    sharp = (_EDGE_K * (1.80 - 1.00 * (rate - 45.0) / 65.0))[:, None].astype(np.float32)

    def edge(r):
        arg = np.clip(sharp * (1.0 - r), -30.0, 30.0).astype(np.float32)
        return 1.0 / (1.0 + np.exp(-arg))

    img = (_BG + _RING_STEP * edge(r_out) + _BLOOD_STEP * edge(r_in)).astype(np.float32)
    return img


def render_mri(factors: GroundTruthFactors, noise_sigma: float = NOISE_SIGMA) -> np.ndarray:
    """One 32×32 image in [0, 1]; deterministic per (factors, noise_sigma)."""
    img = _mri_clean(
        np.array([factors.heart_scale]),
        np.array([factors.wall_thickness]),
        np.array([factors.heart_rate]),
    )[0]
    if noise_sigma > 0:
        rng = _noise_rng(factors.noise_seed, 0)
        img = img + noise_sigma * rng.standard_normal(SAMPLE_SIZE, dtype=np.float32)
    return np.clip(img, 0.0, 1.0).reshape(_MRI_N, _MRI_N)


def mri_bright_area(image: np.ndarray, threshold: float = 0.5) -> int:
    """Bright-pixel count: the blood-pool area proxy used by the oracles."""
    return int((np.asarray(image) > threshold).sum())


def _wave_coefficients(scale: np.ndarray, wall: np.ndarray):
    """Per-subject wave amplitudes [n, 5] and widths in seconds [n, 5].

    Voltage scales with heart size across the whole complex (hypertrophy
    voltage criteria span several waves); wall thickness widens the QRS.
    """
    n = len(scale)
    amp = np.tile(_WAVES[:, 2].astype(np.float32), (n, 1))
    width = np.tile(_WAVES[:, 1].astype(np.float32), (n, 1))
    voltage = (0.35 + 0.80 * scale.astype(np.float32))[:, None]
    qrs_width = (0.75 + 2.50 * wall.astype(np.float32))[:, None]
    # strain pattern: thicker walls flatten the T wave
    t_strain = (1.375 - 2.50 * wall.astype(np.float32))
    amp = (amp * voltage).astype(np.float32)
    amp[:, 4] *= t_strain
    width = np.where(_QRS[None, :], width * qrs_width, width).astype(np.float32)
    return amp, width


def _ecg_clean_regular(scale: np.ndarray, rate: np.ndarray, wall: np.ndarray) -> np.ndarray:
    """Strictly periodic traces via wrapped beat phase, [n, 4*256] float32."""
    scale = np.clip(np.asarray(scale, dtype=np.float32), 0.5, 1.5)
    rate = np.clip(np.asarray(rate, dtype=np.float32), 45.0, 110.0)
    wall = np.clip(np.asarray(wall, dtype=np.float32), 0.05, 0.25)
    n = len(scale)
    t = (np.arange(ECG_SAMPLES, dtype=np.float32) / np.float32(ECG_FS))
    interval = (np.float32(60.0) / rate)[:, None]
    phase = t[None, :] / interval  # beats elapsed
    amp, width = _wave_coefficients(scale, wall)
    gauss = np.empty((n, len(_WAVES), ECG_SAMPLES), dtype=np.float32)
    for w in range(len(_WAVES)):
        u = (phase - np.float32(_WAVES[w, 0])) % np.float32(1.0)
        d = np.minimum(u, np.float32(1.0) - u) * interval  # s to nearest center
        gauss[:, w, :] = np.exp(-((d / width[:, w:w + 1]) ** 2))
    trace = np.einsum("nw,lw,nwt->nlt", amp, _LEAD_SIGNATURE.astype(np.float32), gauss)
    return trace.reshape(n, SAMPLE_SIZE).astype(np.float32)


def _ecg_clean_jittered(scale: np.ndarray, rate: np.ndarray, wall: np.ndarray,
                        intervals: np.ndarray) -> np.ndarray:
    """Sum-of-beats rendering for irregular rhythms; intervals is [n, slots]."""
    scale = np.clip(np.asarray(scale, dtype=np.float32), 0.5, 1.5)
    wall = np.clip(np.asarray(wall, dtype=np.float32), 0.05, 0.25)
    intervals = intervals.astype(np.float32)
    n = len(scale)
    t = np.arange(ECG_SAMPLES, dtype=np.float32) / np.float32(ECG_FS)
    beat_times = np.empty_like(intervals)
    beat_times[:, 0] = -intervals[:, 0]
    for b in range(1, intervals.shape[1]):
        beat_times[:, b] = beat_times[:, b - 1] + intervals[:, b - 1]
    amp, width = _wave_coefficients(scale, wall)
    acc = np.zeros((n, len(_WAVES), ECG_SAMPLES), dtype=np.float32)
    for b in range(intervals.shape[1]):
        start = beat_times[:, b:b + 1]
        if np.all(start > ECG_DURATION + 1.0):
            break
        for w in range(len(_WAVES)):
            center = start + np.float32(_WAVES[w, 0]) * intervals[:, b:b + 1]
            d = t[None, :] - center
            acc[:, w, :] += np.exp(-((d / width[:, w:w + 1]) ** 2))
    trace = np.einsum("nw,lw,nwt->nlt", amp, _LEAD_SIGNATURE.astype(np.float32), acc)
    return trace.reshape(n, SAMPLE_SIZE).astype(np.float32)


def _jitter_intervals(rate: np.ndarray, jitter: float, seeds: np.ndarray) -> np.ndarray:
    """Per-beat intervals with seeded lognormal-ish spread, [n, slots]."""
    base = 60.0 / np.clip(np.asarray(rate, dtype=np.float64), 45.0, 110.0)
    out = np.empty((len(base), _N_BEAT_SLOTS))
    for i, seed in enumerate(seeds):
        xi = _noise_rng(int(seed), 2).standard_normal(_N_BEAT_SLOTS)
        out[i] = base[i] * (1.0 + jitter * np.clip(xi, -2.0, 2.0))
    return out


def render_ecg(factors: GroundTruthFactors, noise_sigma: float = NOISE_SIGMA,
               rhythm_jitter: float = 0.0) -> np.ndarray:
    """One 4×256 trace in [-2, 2].

    ``rhythm_jitter`` > 0 renders irregular beat intervals (the atrial
    fibrillation pathway); its draws are seeded from factors.noise_seed, so
    the trace stays a deterministic function of the record.
    """
    scale = np.array([factors.heart_scale])
    rate = np.array([factors.heart_rate])
    wall = np.array([factors.wall_thickness])
    if rhythm_jitter > 0:
        iv = _jitter_intervals(rate, rhythm_jitter, np.array([factors.noise_seed]))
        trace = _ecg_clean_jittered(scale, rate, wall, iv)[0]
    else:
        trace = _ecg_clean_regular(scale, rate, wall)[0]
    if noise_sigma > 0:
        rng = _noise_rng(factors.noise_seed, 1)
        trace = trace + noise_sigma * rng.standard_normal(SAMPLE_SIZE, dtype=np.float32)
    return np.clip(trace, -2.0, 2.0).reshape(ECG_LEADS, ECG_SAMPLES)


# -- splits ----------------------------------------------------------------------


def split_counts(n: int) -> dict[str, int]:
    """Floor each split at its published fraction, then hand the whole
    remainder to the split with the largest fractional part.

    Integer arithmetic throughout: 2000 → 1394/404/202, 37774 → 26328/7639/3807.
    """
    counts = {name: (n * num) // 10000 for num, name in SPLIT_FRACTIONS}
    fractional = {name: (n * num) % 10000 for num, name in SPLIT_FRACTIONS}
    remainder = n - sum(counts.values())
    if remainder:
        winner = max(SPLIT_FRACTIONS, key=lambda nf: fractional[nf[1]])[1]
        counts[winner] += remainder
    return counts


# -- cohort generation --------------------------------------------------------------


def generate_cohort(n: int, seed: int) -> Dataset:
    """Deterministic cohort of ``n`` subjects; bitwise identical per (n, seed)."""
    if n < 30:
        raise ArgumentError(f"cohort size must be at least 30, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))

    male = rng.random(n) >= P_FEMALE
    flags = {}
    for key, (overall, male_rate) in _DISEASES.items():
        female_rate = _female_rate(overall, male_rate)
        p = np.where(male, male_rate, female_rate)
        flags[key] = rng.random(n) < p

    age = np.clip(rng.normal(AGE_MEAN, AGE_SD, n), 40.0, 80.0)
    bmi = np.clip(rng.normal(BMI_MEAN, BMI_SD, n), 15.0, 50.0)

    scale_mu = np.where(male, HEART_SCALE_MEAN["male"], HEART_SCALE_MEAN["female"])
    heart_scale = scale_mu + HEART_SCALE_SD * rng.standard_normal(n)
    heart_scale += AF_SCALE_SHIFT * flags["af"] + CAD_SCALE_SHIFT * flags["cad"]
    heart_scale = np.clip(heart_scale, 0.5, 1.5)

    wall = WALL_MEAN + WALL_SD * rng.standard_normal(n)
    wall += (HTN_WALL_SHIFT * flags["htn"] + T2D_WALL_SHIFT * flags["t2d"]
             + HCM_WALL_SHIFT * flags["hcm"])
    wall = np.clip(wall, 0.05, 0.25)

    rate = RATE_MEAN + RATE_SD * rng.standard_normal(n)
    rate += (AF_RATE_SHIFT * flags["af"] + T2D_RATE_SHIFT * flags["t2d"]
             + CAD_RATE_SHIFT * flags["cad"])
    rate = np.clip(rate, 45.0, 110.0)

    noise_seed = rng.integers(0, 2 ** 64, size=n, dtype=np.uint64)

    counts = split_counts(n)
    perm = rng.permutation(n)
    split = np.empty(n, dtype=np.uint8)
    hi = counts["train"]
    split[perm[:hi]] = 0
    split[perm[hi:hi + counts["validation"]]] = 1
    split[perm[hi + counts["validation"]:]] = 2

    # factors are persisted as f32; render from the persisted values so a
    # record's samples reproduce from the record alone
    heart_scale32 = heart_scale.astype(np.float32)
    rate32 = rate.astype(np.float32)
    wall32 = wall.astype(np.float32)

    records = np.zeros(n, dtype=RECORD_DTYPE)
    records["id"] = np.arange(n, dtype=np.uint64)
    records["age"] = age.astype(np.float32)
    records["bmi"] = bmi.astype(np.float32)
    records["sex"] = male.astype(np.uint8)
    for key in ("af", "cad", "t2d", "htn", "hcm"):
        records[key] = flags[key].astype(np.uint8)
    records["split"] = split
    records["heart_scale"] = heart_scale32
    records["heart_rate"] = rate32
    records["wall_thickness"] = wall32
    records["noise_seed"] = noise_seed

    chunk = 4096
    af = flags["af"]
    for lo in range(0, n, chunk):
        hi_ = min(lo + chunk, n)
        s = heart_scale32[lo:hi_].astype(np.float64)
        r = rate32[lo:hi_].astype(np.float64)
        w = wall32[lo:hi_].astype(np.float64)
        records["mri"][lo:hi_] = _mri_clean(s, w, r)
        ecg = np.empty((hi_ - lo, SAMPLE_SIZE), dtype=np.float32)
        reg = ~af[lo:hi_]
        if reg.any():
            ecg[reg] = _ecg_clean_regular(s[reg], r[reg], w[reg])
        if (~reg).any():
            iv = _jitter_intervals(r[~reg], AF_RHYTHM_JITTER, noise_seed[lo:hi_][~reg])
            ecg[~reg] = _ecg_clean_jittered(s[~reg], r[~reg], w[~reg], iv)
        records["ecg"][lo:hi_] = ecg

    mri_rows = records["mri"]
    ecg_rows = records["ecg"]
    buf = np.empty(SAMPLE_SIZE, dtype=np.float32)
    for i in range(n):
        ns = int(noise_seed[i])
        _noise_rng(ns, 0).standard_normal(dtype=np.float32, out=buf)
        buf *= NOISE_SIGMA
        mri_rows[i] += buf
        _noise_rng(ns, 1).standard_normal(dtype=np.float32, out=buf)
        buf *= NOISE_SIGMA
        ecg_rows[i] += buf
    np.clip(mri_rows, 0.0, 1.0, out=mri_rows)
    np.clip(ecg_rows, -2.0, 2.0, out=ecg_rows)

    return Dataset(records, seed=seed)
