"""Procedural thermogram generator: per-identity vascular templates plus frame effects.

Each identity gets a fixed template: a warm face ellipse over a cold
background, a smooth per-identity temperature field, and a set of warm
vessel strokes. Frames of that identity add a small pose jitter, a smooth
elastic warp (a stand-in for expression changes), optionally a cold eyeband
where glasses block emission, a global ambient offset, and sensor noise.
All randomness flows from one seed through per-identity and per-frame
sub-sequences, so frames could be produced in parallel without changing
any pixel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import SeedSequence, default_rng

from .data import DatasetManifest, ManifestEntry, Thermogram
from .errors import ConfigError
from .resample import affine_sample, bilinear_sample, resize_bilinear

BACKGROUND_C = 22.0
SKIN_C = 34.0
VESSEL_DELTA_C = 1.5
GLASSES_C = 24.0

# Identity-to-identity vs frame-to-frame variation is balanced on purpose:
# identities must differ enough that noiseless templates decorrelate, yet an
# untrained encoder must stay near chance, so identity lives mostly in face
# proportions plus fine vessel/field texture while pose jitter supplies
# comparable frame noise.
FIELD_AMPLITUDE_C = 1.2     # smooth per-identity temperature field
FIELD_GRID = 12             # coarse grid side of that field
AXES_JITTER = 0.08          # relative jitter of ellipse axes
CENTER_JITTER_FRAC = 0.03   # ellipse center offset relative to image side
VESSEL_SIGMA_FRAC = 0.018   # vessel stroke width relative to image side

POSE_ROTATION_DEG = 3.5
POSE_SHIFT_FRAC = 0.025     # of image side
POSE_SCALE_JITTER = 0.04


@dataclass(frozen=True)
class SynthConfig:
    """Knobs of the synthetic dataset; magnitudes are in the units of their names."""

    n_identities: int
    frames_per_identity: int
    image_size: int = 64
    vessel_count: int = 12
    session_noise_mk: float = 30.0
    ambient_drift_c: float = 0.5
    glasses_probability: float = 0.1
    warp_amplitude_px: float = 1.5
    seed: int = 0


def _validate(config: SynthConfig) -> None:
    if config.n_identities < 1:
        raise ConfigError(f"n_identities must be positive, got {config.n_identities}")
    if config.frames_per_identity < 1:
        raise ConfigError(f"frames_per_identity must be positive, got {config.frames_per_identity}")
    if config.image_size < 16:
        raise ConfigError(f"image_size must be at least 16, got {config.image_size}")
    if config.vessel_count < 1:
        raise ConfigError(f"vessel_count must be positive, got {config.vessel_count}")
    for name in ("session_noise_mk", "ambient_drift_c", "warp_amplitude_px"):
        if getattr(config, name) < 0:
            raise ConfigError(f"{name} must be non-negative")
    if not (0.0 <= config.glasses_probability <= 1.0):
        raise ConfigError(f"glasses_probability must be in [0, 1], got {config.glasses_probability}")


def _identity_sequences(config: SynthConfig) -> list[SeedSequence]:
    return SeedSequence(config.seed).spawn(config.n_identities)


def _segment_distance(yy, xx, p0, p1):
    # distance from every grid point to the segment p0-p1
    v = p1 - p0
    length_sq = float(v @ v)
    dy = yy - p0[0]
    dx = xx - p0[1]
    if length_sq == 0.0:
        return np.hypot(dy, dx)
    t = np.clip((dy * v[0] + dx * v[1]) / length_sq, 0.0, 1.0)
    return np.hypot(dy - t * v[0], dx - t * v[1])


def _make_template(config: SynthConfig, seq: SeedSequence) -> np.ndarray:
    rng = default_rng(seq)
    s = config.image_size
    yy, xx = np.meshgrid(np.arange(s, dtype=np.float64),
                         np.arange(s, dtype=np.float64), indexing="ij")

    # face ellipse with per-identity geometry
    cy = (s - 1) / 2.0 + rng.uniform(-CENTER_JITTER_FRAC, CENTER_JITTER_FRAC) * s
    cx = (s - 1) / 2.0 + rng.uniform(-CENTER_JITTER_FRAC, CENTER_JITTER_FRAC) * s
    ay = 0.38 * s * (1.0 + rng.uniform(-AXES_JITTER, AXES_JITTER))
    ax = 0.30 * s * (1.0 + rng.uniform(-AXES_JITTER, AXES_JITTER))
    r = np.sqrt(((yy - cy) / ay) ** 2 + ((xx - cx) / ax) ** 2)
    mask = 1.0 / (1.0 + np.exp((r - 1.0) / 0.04))  # soft edge, ~1 px wide

    # smooth per-identity temperature field over the face
    coarse = rng.uniform(-1.0, 1.0, size=(FIELD_GRID, FIELD_GRID))
    fieldmap = resize_bilinear(coarse, s, s) * FIELD_AMPLITUDE_C

    # warm vessel strokes: short random walks rasterized with a soft profile
    vessels = np.zeros((s, s))
    sigma = max(0.9, VESSEL_SIGMA_FRAC * s)
    for _ in range(config.vessel_count):
        angle = rng.uniform(0.0, 2.0 * np.pi)
        radius = rng.uniform(0.0, 0.7)
        point = np.array([cy + radius * ay * np.sin(angle),
                          cx + radius * ax * np.cos(angle)])
        heading = rng.uniform(0.0, 2.0 * np.pi)
        for _ in range(rng.integers(4, 7)):
            heading += rng.uniform(-0.8, 0.8)
            step = rng.uniform(0.08, 0.14) * s
            nxt = point + step * np.array([np.sin(heading), np.cos(heading)])
            d = _segment_distance(yy, xx, point, nxt)
            vessels = np.maximum(vessels, np.exp(-0.5 * (d / sigma) ** 2))
            point = nxt

    return BACKGROUND_C + mask * (SKIN_C - BACKGROUND_C + fieldmap + VESSEL_DELTA_C * vessels)


def identity_template(config: SynthConfig, index: int) -> Thermogram:
    """Noiseless base image of one identity, reproducible independently of frames."""
    _validate(config)
    if not (0 <= index < config.n_identities):
        raise ConfigError(f"identity index {index} outside [0, {config.n_identities})")
    template_seq, _frames = _identity_sequences(config)[index].spawn(2)
    pixels = _make_template(config, template_seq)
    return Thermogram(pixels=pixels, subject_id=_subject_id(index))


def _subject_id(index: int) -> str:
    return f"id{index:03d}"


def _elastic_warp(img: np.ndarray, amplitude_px: float, rng, fill: float) -> np.ndarray:
    s = img.shape[0]
    disp_y = resize_bilinear(rng.uniform(-amplitude_px, amplitude_px, size=(4, 4)), s, s)
    disp_x = resize_bilinear(rng.uniform(-amplitude_px, amplitude_px, size=(4, 4)), s, s)
    yy, xx = np.meshgrid(np.arange(s, dtype=np.float64),
                         np.arange(s, dtype=np.float64), indexing="ij")
    return bilinear_sample(img, yy + disp_y, xx + disp_x, fill)


def _make_frame(template: np.ndarray, config: SynthConfig, seq: SeedSequence) -> np.ndarray:
    rng = default_rng(seq)
    s = config.image_size

    angle = rng.uniform(-POSE_ROTATION_DEG, POSE_ROTATION_DEG)
    scl = 1.0 + rng.uniform(-POSE_SCALE_JITTER, POSE_SCALE_JITTER)
    shift = rng.uniform(-POSE_SHIFT_FRAC * s, POSE_SHIFT_FRAC * s, size=2)
    frame = affine_sample(template, angle, scl, (shift[0], shift[1]), fill=BACKGROUND_C)

    if config.warp_amplitude_px > 0:
        frame = _elastic_warp(frame, config.warp_amplitude_px, rng, fill=BACKGROUND_C)

    wears_glasses = rng.uniform() < config.glasses_probability
    if wears_glasses:
        c = (s - 1) / 2.0
        r0, r1 = int(round(c - 0.16 * s)), int(round(c - 0.04 * s))
        c0, c1 = int(round(c - 0.30 * s)), int(round(c + 0.30 * s))
        frame = frame.copy()
        frame[r0:r1, c0:c1] = GLASSES_C

    frame = frame + rng.uniform(-config.ambient_drift_c, config.ambient_drift_c)
    noise_c = config.session_noise_mk / 1000.0
    if noise_c > 0:
        frame = frame + rng.normal(0.0, noise_c, size=frame.shape)
    return frame


def generate_synthetic(config: SynthConfig) -> DatasetManifest:
    """Produce the full in-memory dataset described by the config."""
    _validate(config)
    entries = []
    for i, id_seq in enumerate(_identity_sequences(config)):
        template_seq, frames_master = id_seq.spawn(2)
        template = _make_template(config, template_seq)
        frame_seqs = frames_master.spawn(config.frames_per_identity)
        half = (config.frames_per_identity + 1) // 2
        for f, frame_seq in enumerate(frame_seqs):
            pixels = _make_frame(template, config, frame_seq)
            session = f"s{f // half}"
            entries.append(ManifestEntry(
                subject_id=_subject_id(i), session_id=session,
                thermogram=Thermogram(pixels=pixels, subject_id=_subject_id(i),
                                      session_id=session)))
    return DatasetManifest(entries=tuple(entries))
