import pytest

from thermoface.cli import main
from thermoface.data import read_manifest

SMALL_NET = ["--input-size", "32", "--conv-blocks", "4x5x2,8x3x2", "--embedding-dim", "8"]


def run_synth(out_dir, seed=3, n_identities=6, frames=4):
    return main(["synth", "--out", str(out_dir),
                 "--n-identities", str(n_identities),
                 "--frames-per-identity", str(frames),
                 "--image-size", "32", "--seed", str(seed)])


@pytest.fixture
def dataset_dir(tmp_path):
    out = tmp_path / "data"
    assert run_synth(out) == 0
    return out


@pytest.fixture
def trained_model(tmp_path, dataset_dir):
    model = tmp_path / "model.tvm"
    rc = main(["train", "--manifest", str(dataset_dir / "manifest.csv"),
               "--model-out", str(model), "--epochs", "2", "--pairs-per-epoch", "8",
               "--augment", "false", *SMALL_NET])
    assert rc == 0
    return model


class TestSynth:
    def test_writes_files_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "d"
        assert run_synth(out, n_identities=3, frames=4) == 0
        manifest = read_manifest(out / "manifest.csv")
        assert len(manifest) == 12
        assert len(list(out.glob("*.pgm"))) == 12
        stdout = capsys.readouterr().out
        assert "12 thermograms" in stdout
        assert "config seed=3" in stdout

    def test_rerun_same_seed_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_synth(a)
        run_synth(b)
        for fa in sorted(a.iterdir()):
            fb = b / fa.name
            assert fa.read_bytes() == fb.read_bytes()

    def test_zero_identities_is_config_error(self, tmp_path):
        rc = main(["synth", "--out", str(tmp_path / "x"), "--n-identities", "0",
                   "--frames-per-identity", "4"])
        assert rc == 2

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "synth.cfg"
        cfg.write_text("n_identities=2\nframes_per_identity=3\nimage_size=32\nseed=9\n")
        out = tmp_path / "d"
        rc = main(["synth", "--out", str(out), "--config", str(cfg), "--seed", "4"])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "config seed=4" in stdout          # flag wins
        assert "config n_identities=2" in stdout  # file value kept
        assert len(read_manifest(out / "manifest.csv")) == 6


class TestTrain:
    def test_history_and_model_written(self, tmp_path, dataset_dir):
        model = tmp_path / "m.tvm"
        history = tmp_path / "h.csv"
        rc = main(["train", "--manifest", str(dataset_dir / "manifest.csv"),
                   "--model-out", str(model), "--history-out", str(history),
                   "--epochs", "2", "--pairs-per-epoch", "6", "--augment", "false",
                   *SMALL_NET])
        assert rc == 0
        lines = history.read_text().splitlines()
        assert lines[0] == "epoch,mean_loss"
        assert len(lines) == 3
        assert model.exists()

    def test_missing_manifest_is_io_error(self, tmp_path):
        rc = main(["train", "--manifest", str(tmp_path / "none.csv"),
                   "--model-out", str(tmp_path / "m.tvm")])
        assert rc == 4

    def test_rerun_identical_model_bytes(self, tmp_path, dataset_dir):
        args = ["train", "--manifest", str(dataset_dir / "manifest.csv"),
                "--epochs", "2", "--pairs-per-epoch", "6", "--augment", "false",
                *SMALL_NET]
        main(args + ["--model-out", str(tmp_path / "m1.tvm")])
        main(args + ["--model-out", str(tmp_path / "m2.tvm")])
        assert (tmp_path / "m1.tvm").read_bytes() == (tmp_path / "m2.tvm").read_bytes()


class TestEval:
    def test_report_written_and_summary_printed(self, tmp_path, dataset_dir,
                                                trained_model, capsys):
        report = tmp_path / "report.csv"
        rc = main(["eval", "--manifest", str(dataset_dir / "manifest.csv"),
                   "--model", str(trained_model), "--report-out", str(report),
                   "--eval-pairs", "20"])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "accuracy" in stdout and "eer" in stdout
        lines = report.read_text().splitlines()
        assert lines[0].startswith("row_type,threshold")
        assert lines[-1].startswith("summary,")

    def test_tau_override_echoed(self, tmp_path, dataset_dir, trained_model, capsys):
        rc = main(["eval", "--manifest", str(dataset_dir / "manifest.csv"),
                   "--model", str(trained_model), "--eval-pairs", "20",
                   "--tau", "0.25"])
        assert rc == 0
        assert "config tau=0.25" in capsys.readouterr().out

    def test_rerun_identical_report_bytes(self, tmp_path, dataset_dir, trained_model):
        args = ["eval", "--manifest", str(dataset_dir / "manifest.csv"),
                "--model", str(trained_model), "--eval-pairs", "20"]
        main(args + ["--report-out", str(tmp_path / "r1.csv")])
        main(args + ["--report-out", str(tmp_path / "r2.csv")])
        assert (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r2.csv").read_bytes()


class TestValidateCamera:
    def write_profile(self, path, **kv):
        base = dict(width=640, height=512, netd_mk=20, band_low_um=8.0,
                    band_high_um=14.0, frame_rate_hz=30)
        base.update(kv)
        path.write_text("\n".join(f"{k}={v}" for k, v in base.items()) + "\n")

    def test_compliant_profile_exit_zero(self, tmp_path, capsys):
        p = tmp_path / "cam.cfg"
        self.write_profile(p)
        assert main(["validate-camera", "--profile", str(p)]) == 0
        assert "OK" in capsys.readouterr().out

    def test_slow_camera_fails_with_message(self, tmp_path, capsys):
        p = tmp_path / "cam.cfg"
        self.write_profile(p, frame_rate_hz=9)
        assert main(["validate-camera", "--profile", str(p)]) == 1
        out = capsys.readouterr().out
        assert "FAIL frame_rate" in out

    def test_warn_only_profile_exits_zero(self, tmp_path, capsys):
        p = tmp_path / "cam.cfg"
        self.write_profile(p, netd_mk=25)
        assert main(["validate-camera", "--profile", str(p)]) == 0
        assert "WARN netd" in capsys.readouterr().out

    def test_malformed_profile_nonzero(self, tmp_path):
        p = tmp_path / "cam.cfg"
        p.write_text("width 640\n")
        assert main(["validate-camera", "--profile", str(p)]) == 3


class TestGalleryCommands:
    def test_enroll_verify_identify_flow(self, tmp_path, dataset_dir, trained_model, capsys):
        gallery = tmp_path / "g.tvg"
        probes = sorted(str(p) for p in dataset_dir.glob("id000_*.pgm"))
        rc = main(["enroll", "--gallery", str(gallery), "--model", str(trained_model),
                   "--subject", "id000", "--probes", *probes[:3]])
        assert rc == 0
        assert "enrolled 3 probes" in capsys.readouterr().out

        rc = main(["verify", "--gallery", str(gallery), "--model", str(trained_model),
                   "--subject", "id000", "--probe", probes[0], "--tau", "0.001"])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.startswith("ACCEPT id000 distance 0.000000")

        rc = main(["identify", "--gallery", str(gallery), "--model", str(trained_model),
                   "--probe", probes[0], "--tau", "0.001"])
        assert rc == 0
        assert capsys.readouterr().out.strip() == "id000"

    def test_identify_far_probe_prints_unknown(self, tmp_path, dataset_dir,
                                               trained_model, capsys):
        gallery = tmp_path / "g.tvg"
        probes = sorted(str(p) for p in dataset_dir.glob("id000_*.pgm"))
        other = sorted(str(p) for p in dataset_dir.glob("id001_*.pgm"))
        main(["enroll", "--gallery", str(gallery), "--model", str(trained_model),
              "--subject", "id000", "--probes", probes[0]])
        capsys.readouterr()
        rc = main(["identify", "--gallery", str(gallery), "--model", str(trained_model),
                   "--probe", other[0], "--tau", "0.0"])
        assert rc == 0
        assert capsys.readouterr().out.strip() == "UNKNOWN"

    def test_verify_unknown_subject_exit_code(self, tmp_path, dataset_dir,
                                              trained_model, capsys):
        gallery = tmp_path / "g.tvg"
        probes = sorted(str(p) for p in dataset_dir.glob("id000_*.pgm"))
        main(["enroll", "--gallery", str(gallery), "--model", str(trained_model),
              "--subject", "id000", "--probes", probes[0]])
        rc = main(["verify", "--gallery", str(gallery), "--model", str(trained_model),
                   "--subject", "ghost", "--probe", probes[0], "--tau", "1.0"])
        assert rc == 7

    def test_enroll_with_wrong_model_exit_code(self, tmp_path, dataset_dir, trained_model):
        gallery = tmp_path / "g.tvg"
        probes = sorted(str(p) for p in dataset_dir.glob("id000_*.pgm"))
        main(["enroll", "--gallery", str(gallery), "--model", str(trained_model),
              "--subject", "id000", "--probes", probes[0]])
        other_model = tmp_path / "other.tvm"
        main(["train", "--manifest", str(dataset_dir / "manifest.csv"),
              "--model-out", str(other_model), "--epochs", "1", "--pairs-per-epoch", "4",
              "--augment", "false", "--model-seed", "77", *SMALL_NET])
        rc = main(["enroll", "--gallery", str(gallery), "--model", str(other_model),
                   "--subject", "id001", "--probes", probes[0]])
        assert rc == 5
