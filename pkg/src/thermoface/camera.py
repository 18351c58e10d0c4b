"""Camera-profile validation against the hardware thresholds for thermal biometrics."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import read_kv_file
from .errors import ConfigError

MIN_WIDTH, MIN_HEIGHT = 320, 240
RECOMMENDED_WIDTH, RECOMMENDED_HEIGHT = 640, 512
NETD_FAIL_MK = 30.0
NETD_WARN_MK = 20.0
LWIR_LOW_UM, LWIR_HIGH_UM = 8.0, 14.0
MIN_FRAME_RATE_HZ = 30.0
UNRELIABLE_FRAME_RATE_HZ = 9.0


@dataclass(frozen=True)
class CameraProfile:
    width: int
    height: int
    netd_mk: float
    band_low_um: float
    band_high_um: float
    frame_rate_hz: float

    def __post_init__(self):
        for name in ("width", "height", "netd_mk", "band_low_um", "band_high_um", "frame_rate_hz"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"camera profile field {name} must be positive, got {value}")
        if self.band_low_um >= self.band_high_um:
            raise ConfigError(
                f"band_low_um ({self.band_low_um}) must be below band_high_um ({self.band_high_um})")


@dataclass(frozen=True)
class Finding:
    level: str  # "FAIL" or "WARN"
    rule: str
    message: str


def validate_camera(profile: CameraProfile) -> list[Finding]:
    """Check a camera profile; returns findings in fixed rule order."""
    findings: list[Finding] = []
    w, h = profile.width, profile.height

    if w < MIN_WIDTH or h < MIN_HEIGHT:
        findings.append(Finding("FAIL", "resolution",
                                f"resolution {w}x{h} is below the {MIN_WIDTH}x{MIN_HEIGHT} "
                                "minimum for capturing basic facial features"))
    elif w < RECOMMENDED_WIDTH or h < RECOMMENDED_HEIGHT:
        findings.append(Finding("WARN", "resolution",
                                f"resolution {w}x{h} is below the {RECOMMENDED_WIDTH}x"
                                f"{RECOMMENDED_HEIGHT} recommended for reliable recognition"))

    if profile.netd_mk > NETD_FAIL_MK:
        findings.append(Finding("FAIL", "netd",
                                f"NETD {profile.netd_mk:g} mK exceeds the {NETD_FAIL_MK:g} mK "
                                "ceiling for confident recognition"))
    elif profile.netd_mk > NETD_WARN_MK:
        findings.append(Finding("WARN", "netd",
                                f"NETD {profile.netd_mk:g} mK is above the {NETD_WARN_MK:g} mK "
                                "recommended for high-precision use"))

    if profile.band_low_um < LWIR_LOW_UM or profile.band_high_um > LWIR_HIGH_UM:
        findings.append(Finding("FAIL", "band",
                                f"spectral band {profile.band_low_um:g}-{profile.band_high_um:g} um "
                                f"lies outside the {LWIR_LOW_UM:g}-{LWIR_HIGH_UM:g} um long-wave "
                                "window for passive facial thermography"))

    if profile.frame_rate_hz < MIN_FRAME_RATE_HZ:
        message = (f"frame rate {profile.frame_rate_hz:g} Hz is below the "
                   f"{MIN_FRAME_RATE_HZ:g} Hz needed to avoid motion blur")
        if profile.frame_rate_hz <= UNRELIABLE_FRAME_RATE_HZ:
            message += (f"; at {UNRELIABLE_FRAME_RATE_HZ:g} Hz or less dynamic "
                        "identification is unreliable")
        findings.append(Finding("FAIL", "frame_rate", message))

    return findings


def load_camera_profile(path) -> CameraProfile:
    """Read the five profile fields from a key=value file."""
    values = read_kv_file(Path(path))
    fields = {}
    for name, cast in (("width", int), ("height", int), ("netd_mk", float),
                       ("band_low_um", float), ("band_high_um", float),
                       ("frame_rate_hz", float)):
        if name not in values:
            raise ConfigError(f"{path}: missing camera profile key {name!r}")
        try:
            fields[name] = cast(values[name])
        except ValueError:
            raise ConfigError(f"{path}: key {name!r} has non-numeric value {values[name]!r}") from None
    return CameraProfile(**fields)
