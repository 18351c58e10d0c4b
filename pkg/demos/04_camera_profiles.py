#!/usr/bin/env python3
"""Check thermal-camera profiles against the biometric hardware thresholds.

The validator encodes the requirements for reliable facial thermography:
resolution (320x240 floor, 640x512 recommended), NETD (30 mK ceiling,
20 mK recommended), the 8-14 um long-wave band, and a 30 Hz frame rate.
"""
from thermoface import CameraProfile, validate_camera

profiles = {
    "high-end LWIR unit":    CameraProfile(width=640, height=512, netd_mk=17,
                                           band_low_um=8.0, band_high_um=14.0,
                                           frame_rate_hz=60),
    "mid-range LWIR unit":   CameraProfile(width=640, height=512, netd_mk=25,
                                           band_low_um=8.0, band_high_um=14.0,
                                           frame_rate_hz=30),
    "budget 9 Hz imager":    CameraProfile(width=320, height=240, netd_mk=50,
                                           band_low_um=8.0, band_high_um=14.0,
                                           frame_rate_hz=9),
    "near-infrared camera":  CameraProfile(width=640, height=512, netd_mk=15,
                                           band_low_um=0.75, band_high_um=1.4,
                                           frame_rate_hz=60),
}

for name, profile in profiles.items():
    findings = validate_camera(profile)
    verdict = "FAIL" if any(f.level == "FAIL" for f in findings) else \
        ("WARN" if findings else "OK")
    print(f"\n{name}: {verdict}")
    for f in findings:
        print(f"  {f.level} [{f.rule}] {f.message}")
    if not findings:
        print("  meets every threshold")
