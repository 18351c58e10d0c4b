"""Open-set enrollment store: per-subject reference embeddings with verify/identify."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Thermogram, preprocess
from .encoder import ModelParams, embed, euclidean_distance, params_fingerprint
from .errors import CompatibilityError, ContractError, FormatError, NotEnrolledError

GALLERY_MAGIC = b"TVG1"


@dataclass(frozen=True)
class Gallery:
    """Reference embeddings per subject, bound to the model that produced them."""

    model_fingerprint: bytes = b"\x00" * 32
    entries: dict[str, list[np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.model_fingerprint) != 32:
            raise ContractError("model fingerprint must be 32 bytes")
        dims = {e.shape for embs in self.entries.values() for e in embs}
        if len(dims) > 1:
            raise ContractError(f"gallery mixes embedding shapes: {sorted(dims)}")
        for subject, embs in self.entries.items():
            if not embs:
                raise ContractError(f"subject {subject!r} enrolled with no embeddings")

    def subjects(self) -> list[str]:
        return sorted(self.entries)

    def is_empty(self) -> bool:
        return not self.entries


def enroll(g: Gallery, subject_id: str, probes: list[Thermogram],
           params: ModelParams) -> Gallery:
    """Append embeddings of the probes under the subject; returns a new gallery."""
    if not subject_id:
        raise ContractError("subject_id must be non-empty")
    if not probes:
        raise ContractError("enroll needs at least one probe")
    fp = params_fingerprint(params)
    if not g.is_empty() and g.model_fingerprint != fp:
        raise CompatibilityError(
            "gallery was built with a different model; re-enroll with matching weights")
    size = params.config.input_size
    new_embs = [embed(params, preprocess(t, size)) for t in probes]
    entries = {s: list(e) for s, e in g.entries.items()}
    entries.setdefault(subject_id, []).extend(new_embs)
    return Gallery(model_fingerprint=fp, entries=entries)


def _check_model(g: Gallery, params: ModelParams) -> None:
    if g.model_fingerprint != params_fingerprint(params):
        raise CompatibilityError("probe model does not match the gallery's model fingerprint")


def _subject_distance(embs: list[np.ndarray], probe_emb: np.ndarray, match_rule: str) -> float:
    # nearest neighbor is the default: robust when enrollment frames span poses;
    # centroid compares against the mean enrolled embedding instead
    if match_rule == "nearest":
        return min(euclidean_distance(probe_emb, e) for e in embs)
    if match_rule == "centroid":
        return euclidean_distance(probe_emb, np.mean(embs, axis=0))
    raise ContractError(f"unknown match rule {match_rule!r}")


def verify(g: Gallery, subject_id: str, probe: Thermogram, params: ModelParams,
           tau: float, match_rule: str = "nearest") -> tuple[bool, float]:
    """Check one probe against one enrolled subject; accept iff distance <= tau."""
    if subject_id not in g.entries:
        raise NotEnrolledError(f"subject {subject_id!r} is not enrolled")
    _check_model(g, params)
    probe_emb = embed(params, preprocess(probe, params.config.input_size))
    d = _subject_distance(g.entries[subject_id], probe_emb, match_rule)
    return d <= tau, d


def identify_scores(g: Gallery, probe: Thermogram, params: ModelParams,
                    match_rule: str = "nearest") -> dict[str, float]:
    """Distance from the probe to each enrolled subject under the match rule."""
    if g.is_empty():
        raise NotEnrolledError("gallery is empty")
    _check_model(g, params)
    probe_emb = embed(params, preprocess(probe, params.config.input_size))
    return {s: _subject_distance(embs, probe_emb, match_rule) for s, embs in g.entries.items()}


def identify(g: Gallery, probe: Thermogram, params: ModelParams, tau: float,
             match_rule: str = "nearest") -> str | None:
    """Best-matching subject if within tau, else None (open-set rejection).

    Equal minimum distances resolve to the lexicographically smaller subject.
    """
    scores = identify_scores(g, probe, params, match_rule)
    best_subject = None
    best_d = None
    for subject in sorted(scores):
        d = scores[subject]
        if best_d is None or d < best_d:
            best_d = d
            best_subject = subject
    return best_subject if best_d <= tau else None


def serialize_gallery(g: Gallery) -> bytes:
    parts = [GALLERY_MAGIC, g.model_fingerprint]
    dims = {e.shape[0] for embs in g.entries.values() for e in embs}
    dim = dims.pop() if dims else 0
    parts.append(struct.pack("<II", dim, len(g.entries)))
    for subject in sorted(g.entries):
        encoded = subject.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        embs = g.entries[subject]
        parts.append(struct.pack("<I", len(embs)))
        for e in embs:
            parts.append(e.astype("<f8").tobytes())
    return b"".join(parts)


def save_gallery(g: Gallery, path) -> None:
    Path(path).write_bytes(serialize_gallery(g))


def load_gallery(path) -> Gallery:
    blob = Path(path).read_bytes()
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise FormatError(f"gallery file truncated while reading {what}")
        out = blob[pos:pos + n]
        pos += n
        return out

    if take(4, "magic") != GALLERY_MAGIC:
        raise FormatError(f"bad gallery magic, expected {GALLERY_MAGIC!r}")
    fingerprint = take(32, "model fingerprint")
    dim, n_subjects = struct.unpack("<II", take(8, "header"))
    entries: dict[str, list[np.ndarray]] = {}
    for i in range(n_subjects):
        (name_len,) = struct.unpack("<H", take(2, f"subject {i} name length"))
        subject = take(name_len, f"subject {i} name").decode("utf-8")
        (n_embs,) = struct.unpack("<I", take(4, f"subject {i} embedding count"))
        embs = []
        for j in range(n_embs):
            raw = take(8 * dim, f"subject {i} embedding {j}")
            embs.append(np.frombuffer(raw, dtype="<f8").copy())
        entries[subject] = embs
    if pos != len(blob):
        raise FormatError(f"{len(blob) - pos} trailing bytes after gallery data")
    return Gallery(model_fingerprint=fingerprint, entries=entries)
