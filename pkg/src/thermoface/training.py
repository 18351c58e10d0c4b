"""Pair construction, contrastive objective, augmentation and the epoch loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.random import SeedSequence, default_rng

from . import autodiff as ad
from .autodiff import GradTape, Tensor
from .data import Thermogram, preprocess
from .encoder import ModelParams, forward_embedding, sgd_step, watch_params
from .errors import ConfigError, ContractError, DataError, NumericError
from .resample import affine_sample


@dataclass(frozen=True)
class PairSample:
    """Two dataset indices plus whether they carry the same subject label."""

    index_a: int
    index_b: int
    is_same: bool


@dataclass(frozen=True)
class AugParams:
    max_rotation_deg: float = 10.0
    scale_range: tuple[float, float] = (0.9, 1.1)
    enabled: bool = True


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    learning_rate: float = 0.01
    margin: float = 1.0
    pairs_per_epoch: int | None = None  # default: 2x dataset size
    augmentation: AugParams = AugParams()
    seed: int = 0


@dataclass
class TrainHistory:
    mean_loss: list[float] = field(default_factory=list)
    pair_counts: list[int] = field(default_factory=list)


def make_pairs(labels: list[str], n_pairs: int, seed) -> list[PairSample]:
    """Sample n_pairs same/different pairs, balanced to within one.

    Same and different pairs alternate (same first) so per-pair training sees
    both polarities evenly. Identical seeds give identical lists.
    """
    if n_pairs < 1:
        raise ContractError(f"n_pairs must be positive, got {n_pairs}")
    by_subject: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        by_subject.setdefault(label, []).append(i)
    multi = [i for i, label in enumerate(labels) if len(by_subject[label]) >= 2]
    if not multi:
        raise DataError("same-pairs impossible: no subject has two or more images")
    if len(by_subject) < 2:
        raise DataError("different-pairs impossible: only one subject present")

    rng = default_rng(seed)
    pairs: list[PairSample] = []
    for i in range(n_pairs):
        # even slots same, odd slots different: ceil(n/2) vs floor(n/2)
        if i % 2 == 0:
            a = int(rng.choice(multi))
            mates = [j for j in by_subject[labels[a]] if j != a]
            b = int(rng.choice(mates))
            pairs.append(PairSample(a, b, True))
        else:
            a = int(rng.integers(len(labels)))
            others = [j for j in range(len(labels)) if labels[j] != labels[a]]
            b = int(rng.choice(others))
            pairs.append(PairSample(a, b, False))
    return pairs


def contrastive_loss(d: float, is_same: bool, margin: float) -> float:
    """Squared distance for same pairs, squared margin shortfall for different pairs."""
    if d < 0:
        raise ContractError(f"distance must be non-negative, got {d}")
    if margin <= 0:
        raise ContractError(f"margin must be positive, got {margin}")
    if is_same:
        return d * d
    gap = margin - d
    return gap * gap if gap > 0 else 0.0


def augment(t: Thermogram, p: AugParams, rng) -> Thermogram:
    """Random rotation and rescale about the center; off-frame pixels take the image minimum."""
    if not p.enabled:
        return t
    lo, hi = p.scale_range
    if not (0.0 < lo <= 1.0 <= hi):
        raise ConfigError(f"scale_range must bracket 1.0 with positive bounds, got {p.scale_range}")
    if p.max_rotation_deg < 0 or not math.isfinite(p.max_rotation_deg):
        raise ConfigError(f"max_rotation_deg must be finite and non-negative, got {p.max_rotation_deg}")
    angle = rng.uniform(-p.max_rotation_deg, p.max_rotation_deg)
    scale = rng.uniform(lo, hi)
    pixels = affine_sample(t.pixels, angle, scale, fill=float(t.pixels.min()))
    return Thermogram(pixels=pixels, subject_id=t.subject_id, session_id=t.session_id)


def pair_loss(param_tensors, config, xa: np.ndarray, xb: np.ndarray,
              is_same: bool, margin: float) -> Tensor:
    """Contrastive loss of one pair, built on the parameters' tape.

    Both towers use the same parameter tensors, so gradients from the two
    inputs accumulate into the one shared weight set.
    """
    ea = forward_embedding(param_tensors, config, Tensor(xa))
    eb = forward_embedding(param_tensors, config, Tensor(xb))
    d2 = ad.total(ad.square(ad.sub(ea, eb)))
    if is_same:
        return d2
    hinge = ad.relu(ad.const_minus(margin, ad.sqrt(d2)))
    return ad.square(hinge)


def train(config: TrainConfig, dataset: list[tuple[Thermogram, str]],
          params: ModelParams) -> tuple[ModelParams, TrainHistory]:
    """Per-pair SGD on the contrastive objective; bitwise deterministic per seed."""
    if config.epochs < 0:
        raise ConfigError(f"epochs must be non-negative, got {config.epochs}")
    if config.learning_rate <= 0:
        raise ConfigError(f"learning_rate must be positive, got {config.learning_rate}")
    if config.margin <= 0:
        raise ConfigError(f"margin must be positive, got {config.margin}")
    history = TrainHistory()
    if config.epochs == 0:
        return params, history

    labels = [subject for _t, subject in dataset]
    n_pairs = config.pairs_per_epoch if config.pairs_per_epoch else 2 * len(dataset)
    if n_pairs < 1:
        raise ConfigError(f"pairs_per_epoch must be positive, got {n_pairs}")
    size = params.config.input_size
    aug = config.augmentation

    # static inputs can be preprocessed once
    cache = None if aug.enabled else [preprocess(t, size) for t, _s in dataset]

    epoch_seqs = SeedSequence(config.seed).spawn(config.epochs)
    current = params
    for epoch, epoch_seq in enumerate(epoch_seqs):
        pair_seq, aug_seq = epoch_seq.spawn(2)
        pairs = make_pairs(labels, n_pairs, pair_seq)
        aug_rng = default_rng(aug_seq)
        losses = []
        for pair in pairs:
            if cache is not None:
                xa, xb = cache[pair.index_a], cache[pair.index_b]
            else:
                xa = preprocess(augment(dataset[pair.index_a][0], aug, aug_rng), size)
                xb = preprocess(augment(dataset[pair.index_b][0], aug, aug_rng), size)
            tape = GradTape()
            param_tensors = watch_params(tape, current)
            loss = pair_loss(param_tensors, current.config, xa, xb, pair.is_same, config.margin)
            value = float(loss.data.reshape(()))
            if not math.isfinite(value):
                raise NumericError(f"non-finite loss at epoch {epoch}")
            grad_map = tape.gradients(loss)
            grads = [grad_map.get(pt.tid) for pt in param_tensors]
            if any(g is not None and not np.all(np.isfinite(g)) for g in grads):
                raise NumericError(f"non-finite gradients at epoch {epoch}")
            try:
                current = sgd_step(current, grads, config.learning_rate)
            except ContractError as e:
                # diverging updates overflow the parameter finiteness invariant
                raise NumericError(f"non-finite parameter update at epoch {epoch}") from e
            losses.append(value)
        history.mean_loss.append(float(np.mean(losses)))
        history.pair_counts.append(len(pairs))
    return current, history


def write_history_csv(history: TrainHistory, path) -> None:
    lines = ["epoch,mean_loss"]
    for epoch, loss in enumerate(history.mean_loss):
        lines.append(f"{epoch},{loss!r}")
    Path(path).write_text("\n".join(lines) + "\n")
