"""Thermogram ingestion, preprocessing, dataset manifests and train/test splits.

File formats:
  * 16-bit binary PGM (P5, maxval 65535, big-endian samples per the PGM spec)
    with a sidecar text header `<file>.hdr` declaring `temp_low`/`temp_high`
    in degrees C plus optional `subject_id`/`session_id`.
  * CSV of raw degree-C values, with the same optional sidecar.
  * Manifest CSV with columns `path,subject_id,session_id`; paths are
    resolved relative to the manifest location.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, FormatError
from .resample import resize_bilinear

TEMP_MIN_C = -40.0
TEMP_MAX_C = 150.0


@dataclass(frozen=True)
class Thermogram:
    """Single-channel temperature raster (degrees C) with optional labels."""

    pixels: np.ndarray  # (height, width) float64
    subject_id: str | None = None
    session_id: str | None = None

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise DataError(f"thermogram pixels must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("thermogram contains non-finite temperatures")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < TEMP_MIN_C or hi > TEMP_MAX_C:
            raise DataError(
                f"temperatures [{lo:.2f}, {hi:.2f}] C outside plausible range "
                f"[{TEMP_MIN_C}, {TEMP_MAX_C}] C")
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def _sidecar_path(path) -> Path:
    return Path(str(path) + ".hdr")


def _read_sidecar(path) -> dict[str, str]:
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        return {}
    values: dict[str, str] = {}
    for lineno, line in enumerate(sidecar.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{sidecar}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _write_sidecar(path, temp_low: float, temp_high: float,
                   subject_id: str | None, session_id: str | None) -> None:
    lines = [f"temp_low={temp_low!r}", f"temp_high={temp_high!r}"]
    if subject_id is not None:
        lines.append(f"subject_id={subject_id}")
    if session_id is not None:
        lines.append(f"session_id={session_id}")
    _sidecar_path(path).write_text("\n".join(lines) + "\n")


def _parse_pgm16(blob: bytes, path) -> np.ndarray:
    # header: P5, width, height, maxval, single whitespace, then samples
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(blob):
            raise FormatError(f"{path}: truncated PGM header at offset {pos}")
        c = blob[pos:pos + 1]
        if c == b"#":  # comment runs to end of line
            while pos < len(blob) and blob[pos:pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(blob) and not blob[pos:pos + 1].isspace() and blob[pos:pos + 1] != b"#":
                pos += 1
            tokens.append(blob[start:pos])
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise FormatError(f"{path}: non-numeric PGM header fields") from None
    if maxval != 65535:
        raise FormatError(f"{path}: expected 16-bit PGM (maxval 65535), got {maxval}")
    pos += 1  # single whitespace after maxval
    expected = width * height * 2
    data = blob[pos:pos + expected]
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} sample bytes at offset {pos}, found {len(data)}")
    return np.frombuffer(data, dtype=">u2").reshape(height, width).astype(np.float64)


def _load_pgm16(path) -> Thermogram:
    meta = _read_sidecar(path)
    if "temp_low" not in meta or "temp_high" not in meta:
        raise FormatError(f"{path}: sidecar header must declare temp_low and temp_high")
    try:
        lo = float(meta["temp_low"])
        hi = float(meta["temp_high"])
    except ValueError:
        raise FormatError(f"{path}: sidecar temperature range is not numeric") from None
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
        raise FormatError(f"{path}: invalid sidecar temperature range [{lo}, {hi}]")
    raw = _parse_pgm16(Path(path).read_bytes(), path)
    pixels = lo + raw / 65535.0 * (hi - lo)
    return Thermogram(pixels=pixels, subject_id=meta.get("subject_id"),
                      session_id=meta.get("session_id"))


def _load_csv(path) -> Thermogram:
    meta = _read_sidecar(path)
    rows: list[list[float]] = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        row = []
        for col, cell in enumerate(line.split(","), start=1):
            try:
                value = float(cell)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: column {col} is not a number: {cell!r}") from None
            if not np.isfinite(value):
                raise DataError(f"{path}:{lineno}: non-finite temperature in column {col}")
            row.append(value)
        if rows and len(row) != len(rows[0]):
            raise FormatError(f"{path}:{lineno}: row has {len(row)} values, expected {len(rows[0])}")
        rows.append(row)
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    return Thermogram(pixels=np.array(rows), subject_id=meta.get("subject_id"),
                      session_id=meta.get("session_id"))


def load_thermogram(path, format: str) -> Thermogram:
    """Read one thermogram file; format is 'pgm16' or 'csv'."""
    if format == "pgm16":
        return _load_pgm16(path)
    if format == "csv":
        return _load_csv(path)
    raise ConfigError(f"unknown thermogram format {format!r}")


def save_thermogram(t: Thermogram, path) -> None:
    """Write a 16-bit PGM plus sidecar; temperatures quantized over their range."""
    lo = float(t.pixels.min())
    hi = float(t.pixels.max())
    if hi <= lo:
        hi = lo + 1.0  # constant image: keep the linear map well defined
    scaled = np.rint((t.pixels - lo) / (hi - lo) * 65535.0)
    samples = np.clip(scaled, 0, 65535).astype(">u2")
    header = f"P5\n{t.width} {t.height}\n65535\n".encode()
    Path(path).write_bytes(header + samples.tobytes())
    _write_sidecar(path, lo, hi, t.subject_id, t.session_id)


def _guess_format(path) -> str:
    return "csv" if str(path).lower().endswith(".csv") else "pgm16"


@dataclass(frozen=True)
class ManifestEntry:
    """One dataset item: either an in-memory thermogram or a file reference."""

    subject_id: str
    session_id: str | None = None
    thermogram: Thermogram | None = field(default=None, repr=False)
    path: str | None = None

    def __post_init__(self):
        if not self.subject_id:
            raise DataError("manifest entry has empty subject_id")
        if self.thermogram is None and self.path is None:
            raise DataError(f"manifest entry for {self.subject_id!r} has neither pixels nor a path")


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered collection of labeled thermograms (in memory or on disk)."""

    entries: tuple[ManifestEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> ManifestEntry:
        return self.entries[i]

    def subjects(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.subject_id, None)
        return list(seen)

    def load(self, i: int) -> Thermogram:
        e = self.entries[i]
        if e.thermogram is not None:
            return e.thermogram
        t = load_thermogram(e.path, _guess_format(e.path))
        # manifest labels win over whatever the sidecar says
        return replace(t, subject_id=e.subject_id, session_id=e.session_id)

    def load_all(self) -> list[tuple[Thermogram, str]]:
        return [(self.load(i), self.entries[i].subject_id) for i in range(len(self))]


def write_manifest(manifest: DatasetManifest, path) -> None:
    """Write `path,subject_id,session_id` rows; entries must reference files."""
    lines = ["path,subject_id,session_id"]
    for e in manifest.entries:
        if e.path is None:
            raise DataError(f"cannot write manifest row for in-memory thermogram of {e.subject_id!r}")
        lines.append(f"{e.path},{e.subject_id},{e.session_id or ''}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> DatasetManifest:
    base = Path(path).parent
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "path,subject_id,session_id":
        raise FormatError(f"{path}:1: expected header 'path,subject_id,session_id'")
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
        rel, subject_id, session_id = (p.strip() for p in parts)
        if not subject_id:
            raise DataError(f"{path}:{lineno}: empty subject_id")
        entries.append(ManifestEntry(subject_id=subject_id, session_id=session_id or None,
                                     path=str(base / rel)))
    return DatasetManifest(entries=tuple(entries))


def preprocess(t: Thermogram, target_size: int) -> np.ndarray:
    """Center-crop to a square, bilinear-resize, then min-max normalize to [0, 1].

    Returns a 1 x S x S tensor; constant images map to all zeros.
    """
    if target_size < 1:
        raise ConfigError(f"target_size must be positive, got {target_size}")
    h, w = t.pixels.shape
    if min(h, w) < 8:
        raise DataError(f"thermogram {w}x{h} too small to preprocess (min side 8)")
    side = min(h, w)
    r0 = (h - side) // 2
    c0 = (w - side) // 2
    square = t.pixels[r0:r0 + side, c0:c0 + side]
    resized = resize_bilinear(square, target_size, target_size)
    lo = resized.min()
    hi = resized.max()
    if hi > lo:
        out = (resized - lo) / (hi - lo)
    else:
        out = np.zeros_like(resized)
    return out[None, :, :]


@dataclass(frozen=True)
class SplitSpec:
    """How to partition a manifest into train and test sets."""

    mode: str = "by_identity"  # or "by_image"
    train_fraction: float = 0.8
    seed: int = 0


def split_dataset(manifest: DatasetManifest, spec: SplitSpec) -> tuple[DatasetManifest, DatasetManifest]:
    """Seeded, disjoint, exhaustive train/test partition of a manifest."""
    if spec.mode not in ("by_image", "by_identity"):
        raise ConfigError(f"unknown split mode {spec.mode!r}")
    if not (0.0 < spec.train_fraction < 1.0):
        raise ConfigError(f"train_fraction must be in (0, 1), got {spec.train_fraction}")
    rng = np.random.default_rng(spec.seed)

    if spec.mode == "by_image":
        n = len(manifest)
        order = rng.permutation(n)
        cut = int(np.floor(spec.train_fraction * n))
        train = tuple(manifest.entries[i] for i in order[:cut])
        test = tuple(manifest.entries[i] for i in order[cut:])
    else:
        subjects = sorted(set(e.subject_id for e in manifest.entries))
        if len(subjects) < 2:
            raise DataError(f"by_identity split needs at least 2 subjects, found {len(subjects)}")
        order = rng.permutation(len(subjects))
        cut = int(np.floor(spec.train_fraction * len(subjects)))
        train_ids = set(subjects[i] for i in order[:cut])
        train = tuple(e for e in manifest.entries if e.subject_id in train_ids)
        test = tuple(e for e in manifest.entries if e.subject_id not in train_ids)

    if not train or not test:
        raise ConfigError(
            f"split produced an empty partition ({len(train)} train / {len(test)} test)")
    return DatasetManifest(entries=train), DatasetManifest(entries=test)
