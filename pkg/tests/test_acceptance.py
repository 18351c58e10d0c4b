"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with `pytest -v -s tests/test_acceptance.py` to see the per-criterion
lines; the end-to-end criterion trains a full model and takes ~2 minutes.
"""
import time

import numpy as np
import pytest

import thermoface as tf
from thermoface import autodiff as ad
from thermoface.autodiff import GradTape, Tensor
from thermoface.camera import CameraProfile, validate_camera
from thermoface.cli import main
from thermoface.encoder import sgd_step, watch_params
from thermoface.evaluation import pair_distances
from thermoface.training import pair_loss

SMALL = tf.EncoderConfig(input_size=16, conv_blocks=((4, 5, 2), (8, 3, 2)),
                         embedding_dim=8, seed=3)


def report(criterion, passed, detail):
    line = f"ACCEPTANCE {criterion} {'PASS' if passed else 'FAIL'}: {detail}"
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def experiment():
    """Synthesize, split, train and evaluate once; criteria 3 and 4 share it."""
    t0 = time.monotonic()
    synth = tf.SynthConfig(n_identities=12, frames_per_identity=40, seed=7)
    manifest = tf.generate_synthetic(synth)
    train_m, test_m = tf.split_dataset(
        manifest, tf.SplitSpec(mode="by_identity", train_fraction=0.8, seed=0))
    labels = [test_m[i].subject_id for i in range(len(test_m))]
    pairs = tf.make_pairs(labels, 200, 0)

    untrained = tf.build_encoder(tf.EncoderConfig(seed=0))
    d0, y0 = pair_distances(untrained, test_m, pairs)
    tau0 = tf.select_threshold(d0, y0, "max_f1")
    untrained_report = tf.evaluate(untrained, test_m, pairs, tau0)

    trained, history = tf.train(
        tf.TrainConfig(epochs=50, pairs_per_epoch=360, seed=1), train_m.load_all(), untrained)
    d1, y1 = pair_distances(trained, test_m, pairs)
    tau1 = tf.select_threshold(d1, y1, "max_f1")
    trained_report = tf.evaluate(trained, test_m, pairs, tau1)

    return dict(elapsed=time.monotonic() - t0,
                train_m=train_m, test_m=test_m, history=history,
                untrained_report=untrained_report, trained_report=trained_report)


def test_c1_gradient_correctness():
    t0 = time.monotonic()
    rng = np.random.default_rng(5)
    errors = []

    def as_loss(out):
        return ad.total(ad.square(out))

    x = rng.uniform(0.1, 1.0, (2, 6, 6))
    k = rng.normal(size=(3, 2, 3, 3))
    b = rng.normal(size=3)
    errors.append(ad.grad_check(lambda t: as_loss(ad.conv2d(t, Tensor(k), Tensor(b))), x, 1e-4))
    errors.append(ad.grad_check(lambda t: as_loss(ad.conv2d(Tensor(x), t, Tensor(b))), k, 1e-4))
    errors.append(ad.grad_check(lambda t: as_loss(ad.conv2d(Tensor(x), Tensor(k), t)), b, 1e-4))

    signs = rng.choice([-1.0, 1.0], size=16) * rng.uniform(0.1, 1.0, 16)
    errors.append(ad.grad_check(lambda t: as_loss(ad.relu(t)), signs, 1e-4))

    pool_in = rng.permutation(64).astype(float).reshape(1, 8, 8)
    errors.append(ad.grad_check(lambda t: as_loss(ad.max_pool2d(t, 2)), pool_in, 1e-4))

    xv = rng.normal(size=6)
    w = rng.normal(size=(4, 6))
    bv = rng.normal(size=4)
    errors.append(ad.grad_check(lambda t: as_loss(ad.dense(t, Tensor(w), Tensor(bv))), xv, 1e-4))
    errors.append(ad.grad_check(lambda t: as_loss(ad.dense(Tensor(xv), t, Tensor(bv))), w, 1e-4))
    errors.append(ad.grad_check(lambda t: as_loss(ad.dense(Tensor(xv), Tensor(w), t)), bv, 1e-4))

    # full contrastive pipeline on a 16x16 input, checked against every
    # parameter tensor and the input, for both pair polarities
    params = tf.build_encoder(SMALL)
    in_rng = np.random.default_rng(3)
    xa = in_rng.uniform(0, 1, (1, 16, 16))
    xb = in_rng.uniform(0, 1, (1, 16, 16))
    for is_same in (True, False):
        for slot in range(len(params.tensors)):
            def wrt_slot(t, slot=slot, s=is_same):
                pts = [t if i == slot else Tensor(arr)
                       for i, arr in enumerate(params.tensors)]
                return pair_loss(pts, SMALL, xa, xb, s, 1.0)
            errors.append(ad.grad_check(wrt_slot, params.tensors[slot], 1e-4))

        def wrt_input(t, s=is_same):
            pts = [Tensor(arr) for arr in params.tensors]
            ea = tf.encoder.forward_embedding(pts, SMALL, t)
            eb = tf.encoder.forward_embedding(pts, SMALL, Tensor(xb))
            d2 = ad.total(ad.square(ad.sub(ea, eb)))
            if s:
                return d2
            return ad.square(ad.relu(ad.const_minus(1.0, ad.sqrt(d2))))
        errors.append(ad.grad_check(wrt_input, xa, 1e-4))

    elapsed = time.monotonic() - t0
    worst = max(errors)
    report("C1", worst < 1e-4 and elapsed < 30.0,
           f"gradient checks worst rel err {worst:.2e} (<1e-4) in {elapsed:.1f}s (<30s)")


def test_c2_metric_oracle_equivalence(capsys):
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(100):
        n = int(rng.integers(4, 51))
        distances = rng.uniform(0, 1, n).tolist()
        truths = (rng.uniform(size=n) < 0.5).tolist()
        if not any(truths) or all(truths):
            truths[0] = not truths[0]
        tau = float(rng.uniform(0, 1))

        # independent exhaustive recount
        tp = sum(1 for d, y in zip(distances, truths) if d <= tau and y)
        fp = sum(1 for d, y in zip(distances, truths) if d <= tau and not y)
        tn = sum(1 for d, y in zip(distances, truths) if d > tau and not y)
        fn = sum(1 for d, y in zip(distances, truths) if d > tau and y)

        c = tf.confusion([tf.decide(d, tau) for d in distances], truths)
        assert (c.tp, c.fp, c.tn, c.fn) == (tp, fp, tn, fn)

        acc, prec, rec, f1 = tf.compute_metrics(c)
        oracle_prec = tp / (tp + fp) if tp + fp else 0.0
        oracle_rec = tp / (tp + fn) if tp + fn else 0.0
        oracle_f1 = (2 * oracle_prec * oracle_rec / (oracle_prec + oracle_rec)
                     if oracle_prec + oracle_rec else 0.0)
        assert abs(acc - (tp + tn) / n) < 1e-12
        assert abs(prec - oracle_prec) < 1e-12
        assert abs(rec - oracle_rec) < 1e-12
        assert abs(f1 - oracle_f1) < 1e-12

        n_pos, n_neg = sum(truths), n - sum(truths)
        roc = tf.roc_curve(distances, truths, 21)
        best_gap, oracle_eer = None, None
        for p in roc:
            rtp = sum(1 for d, y in zip(distances, truths) if d <= p.threshold and y)
            rfp = sum(1 for d, y in zip(distances, truths) if d <= p.threshold and not y)
            assert abs(p.tpr - rtp / n_pos) < 1e-12
            assert abs(p.fpr - rfp / n_neg) < 1e-12
            gap = abs(p.fpr - (1.0 - p.tpr))
            if best_gap is None or gap < best_gap:
                best_gap = gap
                oracle_eer = (p.fpr + (1.0 - p.tpr)) / 2.0
        eer, _tau = tf.equal_error_rate(roc)
        assert abs(eer - oracle_eer) < 1e-12
        checked += 1

    # counts chosen so tp/(tp+fp) is exactly 0.7761 and tp/(tp+fn) exactly 0.7899
    c = tf.ConfusionCounts(tp=7761 * 7899, fp=2239 * 7899, tn=0, fn=7761 * 2101)
    _acc, prec, rec, f1 = tf.compute_metrics(c)
    assert prec == pytest.approx(0.7761, abs=1e-12)
    assert rec == pytest.approx(0.7899, abs=1e-12)
    with capsys.disabled():
        print(f"\nC2 note: binary F1 of precision 0.7761 and recall 0.7899 is {f1:.4f}; "
              "an externally quoted 0.7368 for the same rates is not the standard "
              "harmonic-mean F1 and is documented here rather than asserted.")
    f1_ok = abs(f1 - 0.7829) < 1e-4
    report("C2", checked == 100 and f1_ok,
           f"confusion/metrics/ROC/EER equal exhaustive recount on {checked} instances; "
           f"f1(0.7761, 0.7899) = {f1:.4f} (0.7829 +/- 1e-4)")


def test_c3_end_to_end_synthetic_verification(experiment):
    train_ids = set(e.subject_id for e in experiment["train_m"].entries)
    test_ids = set(e.subject_id for e in experiment["test_m"].entries)
    rep = experiment["trained_report"]
    ok = (len(train_ids) == 9 and len(test_ids) == 3
          and rep.confusion.total == 200
          and rep.accuracy >= 0.90
          and experiment["elapsed"] < 300.0)
    report("C3", ok,
           f"12x40 synthetic run, split 9/3 identities, 50 epochs: "
           f"held-out accuracy {rep.accuracy:.3f} (>=0.90) at max_f1 threshold "
           f"{rep.threshold:.4f}, eer {rep.eer:.3f}, "
           f"runtime {experiment['elapsed']:.0f}s (<300s)")


def test_c4_chance_level_control(experiment):
    rep = experiment["untrained_report"]
    ok = abs(rep.accuracy - 0.5) <= 0.15 and rep.confusion.total == 200
    report("C4", ok,
           f"untrained encoder on the same 200 pairs: accuracy {rep.accuracy:.3f} "
           f"(within 0.5 +/- 0.15)")


def test_c5_cli_determinism(tmp_path):
    small_net = ["--input-size", "32", "--conv-blocks", "4x5x2,8x3x2",
                 "--embedding-dim", "8"]

    def synth(out):
        assert main(["synth", "--out", str(out), "--n-identities", "6",
                     "--frames-per-identity", "4", "--image-size", "32",
                     "--seed", "3"]) == 0

    synth(tmp_path / "a")
    synth(tmp_path / "b")
    synth_same = all((tmp_path / "a" / f.name).read_bytes() == f.read_bytes()
                     for f in sorted((tmp_path / "b").iterdir()))

    def train_once(tag):
        assert main(["train", "--manifest", str(tmp_path / "a" / "manifest.csv"),
                     "--model-out", str(tmp_path / f"m{tag}.tvm"),
                     "--history-out", str(tmp_path / f"h{tag}.csv"),
                     "--epochs", "2", "--pairs-per-epoch", "8", *small_net]) == 0

    train_once(1)
    train_once(2)
    train_same = ((tmp_path / "m1.tvm").read_bytes() == (tmp_path / "m2.tvm").read_bytes()
                  and (tmp_path / "h1.csv").read_bytes() == (tmp_path / "h2.csv").read_bytes())

    def eval_once(tag):
        assert main(["eval", "--manifest", str(tmp_path / "a" / "manifest.csv"),
                     "--model", str(tmp_path / "m1.tvm"),
                     "--report-out", str(tmp_path / f"r{tag}.csv"),
                     "--eval-pairs", "20"]) == 0

    eval_once(1)
    eval_once(2)
    eval_same = (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r2.csv").read_bytes()

    report("C5", synth_same and train_same and eval_same,
           f"synth/train/eval reruns bitwise identical "
           f"(synth={synth_same}, train={train_same}, eval={eval_same})")


def test_c6_weight_sharing_symmetry():
    rng = np.random.default_rng(6)
    symmetric = all(
        tf.euclidean_distance(a, b) == tf.euclidean_distance(b, a)
        for a, b in (rng.normal(size=(2, 64)) for _ in range(1000)))

    params = tf.build_encoder(SMALL)
    xa = rng.uniform(0, 1, (1, 16, 16))
    xb = rng.uniform(0, 1, (1, 16, 16))

    def one_step(first, second, is_same):
        tape = GradTape()
        pts = watch_params(tape, params)
        loss = pair_loss(pts, SMALL, first, second, is_same, 1.0)
        grads = tape.gradients(loss)
        return sgd_step(params, [grads.get(p.tid) for p in pts], 0.01)

    updates_match = True
    for is_same in (True, False):
        fwd = one_step(xa, xb, is_same)
        rev = one_step(xb, xa, is_same)
        updates_match &= all(ta.tobytes() == tb.tobytes()
                             for ta, tb in zip(fwd.tensors, rev.tensors))

    report("C6", symmetric and updates_match,
           f"distance symmetric on 1000 random pairs (exact={symmetric}); "
           f"swapped pair order leaves the SGD update bitwise unchanged "
           f"({updates_match})")


def test_c7_split_arithmetic():
    from thermoface.data import DatasetManifest, ManifestEntry, Thermogram

    def manifest_of(labels):
        px = np.full((8, 8), 30.0)
        return DatasetManifest(entries=tuple(
            ManifestEntry(subject_id=s, thermogram=Thermogram(pixels=px)) for s in labels))

    images = manifest_of([f"s{i % 32}" for i in range(3720)])
    train, test = tf.split_dataset(images, tf.SplitSpec(mode="by_image",
                                                        train_fraction=0.8, seed=0))
    by_image_ok = (len(train), len(test)) == (2976, 744)

    subjects = manifest_of([f"s{i:02d}" for i in range(32) for _ in range(2)])
    disjoint_ok = True
    identity_ok = True
    for seed in range(5):
        tr, te = tf.split_dataset(subjects, tf.SplitSpec(mode="by_identity",
                                                         train_fraction=0.8, seed=seed))
        tr_ids = set(e.subject_id for e in tr.entries)
        te_ids = set(e.subject_id for e in te.entries)
        identity_ok &= (len(tr_ids), len(te_ids)) == (25, 7)
        disjoint_ok &= not (tr_ids & te_ids)
        disjoint_ok &= len(tr) + len(te) == len(subjects)

    report("C7", by_image_ok and identity_ok and disjoint_ok,
           f"3720 -> 2976/744 by_image ({by_image_ok}); 32 -> 25/7 by_identity "
           f"({identity_ok}); partitions disjoint and exhaustive ({disjoint_ok})")


def test_c8_camera_validator_table():
    table = [
        (CameraProfile(width=640, height=512, netd_mk=25, band_low_um=8,
                       band_high_um=14, frame_rate_hz=30),
         [("WARN", "netd")]),
        (CameraProfile(width=320, height=240, netd_mk=50, band_low_um=8,
                       band_high_um=14, frame_rate_hz=9),
         [("WARN", "resolution"), ("FAIL", "netd"), ("FAIL", "frame_rate")]),
        (CameraProfile(width=640, height=512, netd_mk=15, band_low_um=0.75,
                       band_high_um=1.4, frame_rate_hz=60),
         [("FAIL", "band")]),
    ]
    ok = True
    for profile, expected in table:
        got = [(f.level, f.rule) for f in validate_camera(profile)]
        ok &= got == expected
    report("C8", ok, "three reference profiles produce exactly the listed findings")


def test_c9_loss_properties():
    exact_zero = (tf.contrastive_loss(0.0, True, 1.0) == 0.0
                  and tf.contrastive_loss(1.0, False, 1.0) == 0.0
                  and tf.contrastive_loss(2.5, False, 1.0) == 0.0)
    positive_off_zero_set = (tf.contrastive_loss(0.01, True, 1.0) > 0.0
                             and tf.contrastive_loss(0.99, False, 1.0) > 0.0)

    distances = np.linspace(0.0, 3.0, 100)
    margins = np.linspace(0.05, 2.5, 50)
    points = 0
    non_negative = True
    for m in margins:
        for d in distances:
            for is_same in (True, False):
                value = tf.contrastive_loss(float(d), bool(is_same), float(m))
                non_negative &= value >= 0.0
                zero_expected = (d == 0.0) if is_same else (d >= m)
                non_negative &= (value == 0.0) == zero_expected
                points += 1

    report("C9", exact_zero and positive_off_zero_set and non_negative and points == 10000,
           f"loss zero exactly on the stated set and non-negative on {points} grid points")
