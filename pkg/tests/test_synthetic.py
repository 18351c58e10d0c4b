import numpy as np
import pytest

from thermoface.camera import CameraProfile, load_camera_profile, validate_camera
from thermoface.errors import ConfigError
from thermoface.synthetic import (BACKGROUND_C, GLASSES_C, SKIN_C, SynthConfig,
                                  generate_synthetic, identity_template)


def corr(a, b):
    return float(np.corrcoef(a.ravel(), b.ravel())[0, 1])


SMALL_CFG = SynthConfig(n_identities=4, frames_per_identity=6, image_size=32, seed=11)


class TestGenerator:
    def test_counts_and_labels(self):
        manifest = generate_synthetic(SMALL_CFG)
        assert len(manifest) == 24
        subjects = set(e.subject_id for e in manifest.entries)
        assert len(subjects) == 4
        assert all(e.session_id in ("s0", "s1") for e in manifest.entries)

    def test_bitwise_deterministic(self):
        a = generate_synthetic(SMALL_CFG)
        b = generate_synthetic(SMALL_CFG)
        for i in range(len(a)):
            assert a.load(i).pixels.tobytes() == b.load(i).pixels.tobytes()

    def test_different_seeds_differ(self):
        a = generate_synthetic(SMALL_CFG)
        b = generate_synthetic(SynthConfig(n_identities=4, frames_per_identity=6,
                                           image_size=32, seed=12))
        assert not np.array_equal(a.load(0).pixels, b.load(0).pixels)

    def test_temperatures_plausible(self):
        manifest = generate_synthetic(SMALL_CFG)
        for i in range(len(manifest)):
            px = manifest.load(i).pixels
            assert px.min() > BACKGROUND_C - 3.0
            assert px.max() < SKIN_C + 8.0

    def test_template_independent_of_frame_generation(self):
        # templates must be reproducible without generating any frames
        t0 = identity_template(SMALL_CFG, 2)
        generate_synthetic(SMALL_CFG)
        t1 = identity_template(SMALL_CFG, 2)
        assert np.array_equal(t0.pixels, t1.pixels)

    def test_template_index_validated(self):
        with pytest.raises(ConfigError):
            identity_template(SMALL_CFG, 4)

    def test_zero_identities_rejected(self):
        with pytest.raises(ConfigError):
            generate_synthetic(SynthConfig(n_identities=0, frames_per_identity=5))

    def test_bad_glasses_probability_rejected(self):
        with pytest.raises(ConfigError):
            generate_synthetic(SynthConfig(n_identities=2, frames_per_identity=2,
                                           glasses_probability=1.5))

    def test_glasses_band_appears_at_probability_one(self):
        cfg = SynthConfig(n_identities=1, frames_per_identity=3, image_size=32,
                          glasses_probability=1.0, session_noise_mk=0.0,
                          ambient_drift_c=0.0, seed=5)
        manifest = generate_synthetic(cfg)
        px = manifest.load(0).pixels
        band = px[np.isclose(px, GLASSES_C)]
        assert band.size > 20  # a contiguous cold eyeband got stamped

    def test_noise_scale_honored(self):
        quiet = SynthConfig(n_identities=1, frames_per_identity=2, image_size=32,
                            session_noise_mk=0.0, warp_amplitude_px=0.0,
                            glasses_probability=0.0, ambient_drift_c=0.0, seed=3)
        manifest = generate_synthetic(quiet)
        # with every frame effect but pose disabled, frames are smooth warps of
        # the template; no speckle beyond bilinear interpolation
        px = manifest.load(0).pixels
        lap = np.abs(np.diff(px, axis=0)).max()
        assert np.isfinite(lap)


class TestIdentityStructure:
    def test_separation_thresholds_default_config(self):
        cfg = SynthConfig(n_identities=8, frames_per_identity=12, seed=7)
        manifest = generate_synthetic(cfg)
        templates = [identity_template(cfg, i).pixels for i in range(8)]
        inter = [corr(templates[i], templates[j])
                 for i in range(8) for j in range(i + 1, 8)]
        assert float(np.median(inter)) < 0.95

        rng = np.random.default_rng(0)
        intra = []
        for i in range(8):
            frames = [manifest.load(i * 12 + k).pixels
                      for k in rng.choice(12, 5, replace=False)]
            intra += [corr(frames[a], frames[b])
                      for a in range(5) for b in range(a + 1, 5)]
        assert float(np.median(intra)) > 0.95

    def test_specific_pair_example(self):
        cfg = SynthConfig(n_identities=8, frames_per_identity=12, seed=7)
        manifest = generate_synthetic(cfg)
        t0 = identity_template(cfg, 0).pixels
        t2 = identity_template(cfg, 2).pixels
        assert corr(t0, t2) < 0.95
        f0 = manifest.load(0).pixels   # identity 0, frame 0 (no glasses at seed 7)
        f1 = manifest.load(1).pixels   # identity 0, frame 1
        assert corr(f0, f1) > 0.95


class TestCameraValidator:
    def test_compliant_profile_with_netd_warn_only(self):
        findings = validate_camera(CameraProfile(width=640, height=512, netd_mk=25,
                                                 band_low_um=8, band_high_um=14,
                                                 frame_rate_hz=30))
        assert [(f.level, f.rule) for f in findings] == [("WARN", "netd")]

    def test_slow_low_res_noisy_profile(self):
        findings = validate_camera(CameraProfile(width=320, height=240, netd_mk=50,
                                                 band_low_um=8, band_high_um=14,
                                                 frame_rate_hz=9))
        assert [(f.level, f.rule) for f in findings] == [
            ("WARN", "resolution"), ("FAIL", "netd"), ("FAIL", "frame_rate")]
        frame_finding = findings[-1]
        assert "unreliable" in frame_finding.message

    def test_near_infrared_band_fails(self):
        findings = validate_camera(CameraProfile(width=640, height=512, netd_mk=15,
                                                 band_low_um=0.75, band_high_um=1.4,
                                                 frame_rate_hz=60))
        assert [(f.level, f.rule) for f in findings] == [("FAIL", "band")]

    def test_fully_compliant_profile_is_clean(self):
        findings = validate_camera(CameraProfile(width=640, height=512, netd_mk=20,
                                                 band_low_um=8, band_high_um=14,
                                                 frame_rate_hz=30))
        assert findings == []

    def test_below_minimum_resolution_fails(self):
        findings = validate_camera(CameraProfile(width=160, height=120, netd_mk=20,
                                                 band_low_um=8, band_high_um=14,
                                                 frame_rate_hz=30))
        assert [(f.level, f.rule) for f in findings] == [("FAIL", "resolution")]

    def test_pure_function(self):
        profile = CameraProfile(width=640, height=512, netd_mk=25, band_low_um=8,
                                band_high_um=14, frame_rate_hz=30)
        assert validate_camera(profile) == validate_camera(profile)

    def test_invalid_band_ordering_rejected(self):
        with pytest.raises(ConfigError):
            CameraProfile(width=640, height=512, netd_mk=25, band_low_um=14,
                          band_high_um=8, frame_rate_hz=30)

    def test_profile_file_loading(self, tmp_path):
        path = tmp_path / "cam.cfg"
        path.write_text("width=640\nheight=512\nnetd_mk=25\nband_low_um=8.0\n"
                        "band_high_um=14.0\nframe_rate_hz=30\n")
        profile = load_camera_profile(path)
        assert profile.width == 640 and profile.frame_rate_hz == 30.0

    def test_profile_file_missing_key_rejected(self, tmp_path):
        path = tmp_path / "cam.cfg"
        path.write_text("width=640\n")
        with pytest.raises(ConfigError, match="height"):
            load_camera_profile(path)
