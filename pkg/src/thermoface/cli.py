"""Command-line surface: synth, train, eval, validate-camera, enroll, verify, identify.

Every command reads an optional key=value config file, applies flag
overrides one-for-one, and echoes the effective configuration so a run can
be reproduced bit for bit. Exit codes: 0 success, 1 internal/contract,
2 config, 3 data/format, 4 I/O, 5 model compatibility, 6 numeric,
7 not enrolled.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .camera import load_camera_profile, validate_camera
from .config import coerce_bool, coerce_float, coerce_int, read_kv_file
from .data import (DatasetManifest, ManifestEntry, SplitSpec, load_thermogram,
                   read_manifest, save_thermogram, split_dataset, write_manifest)
from .encoder import EncoderConfig, build_encoder, load_params, save_params
from .errors import (CompatibilityError, ConfigError, DataError, FormatError,
                     NotEnrolledError, NumericError, ThermofaceError)
from .evaluation import (evaluate, format_report, pair_distances, select_threshold,
                         write_report_csv)
from .gallery import Gallery, enroll, identify, load_gallery, save_gallery, verify
from .synthetic import SynthConfig, generate_synthetic
from .training import AugParams, TrainConfig, make_pairs, train, write_history_csv

EXIT_CODES = (
    (ConfigError, 2),
    (DataError, 3),
    (FormatError, 3),
    (CompatibilityError, 5),
    (NumericError, 6),
    (NotEnrolledError, 7),
)


def _effective(args, keys: list[str]) -> dict[str, str]:
    """Config-file values overridden by any flag the user actually set."""
    values: dict[str, str] = {}
    if getattr(args, "config", None):
        values.update(read_kv_file(args.config))
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = str(flag)
    return values


def _echo(values: dict[str, str]) -> None:
    for key in sorted(values):
        print(f"config {key}={values[key]}")


def _parse_blocks(text: str) -> tuple[tuple[int, int, int], ...]:
    blocks = []
    for part in text.split(","):
        dims = part.strip().split("x")
        if len(dims) != 3:
            raise ConfigError(f"conv block {part!r} must be channels x kernel x pool")
        try:
            blocks.append(tuple(int(d) for d in dims))
        except ValueError:
            raise ConfigError(f"conv block {part!r} has non-integer fields") from None
    return tuple(blocks)


SYNTH_KEYS = ["n_identities", "frames_per_identity", "image_size", "vessel_count",
              "session_noise_mk", "ambient_drift_c", "glasses_probability",
              "warp_amplitude_px", "seed"]


def cmd_synth(args) -> int:
    values = _effective(args, SYNTH_KEYS)
    config = SynthConfig(
        n_identities=coerce_int(values, "n_identities", 0),
        frames_per_identity=coerce_int(values, "frames_per_identity", 0),
        image_size=coerce_int(values, "image_size", 64),
        vessel_count=coerce_int(values, "vessel_count", 12),
        session_noise_mk=coerce_float(values, "session_noise_mk", 30.0),
        ambient_drift_c=coerce_float(values, "ambient_drift_c", 0.5),
        glasses_probability=coerce_float(values, "glasses_probability", 0.1),
        warp_amplitude_px=coerce_float(values, "warp_amplitude_px", 1.5),
        seed=coerce_int(values, "seed", 0))
    _echo({k: str(getattr(config, k)) for k in SYNTH_KEYS})

    manifest = generate_synthetic(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(len(manifest)):
        e = manifest[i]
        name = f"{e.subject_id}_f{i % config.frames_per_identity:03d}.pgm"
        save_thermogram(e.thermogram, out_dir / name)
        entries.append(ManifestEntry(subject_id=e.subject_id, session_id=e.session_id,
                                     path=name))
    write_manifest(DatasetManifest(entries=tuple(entries)), out_dir / "manifest.csv")
    print(f"wrote {len(manifest)} thermograms for {config.n_identities} subjects to {out_dir}")
    return 0


SPLIT_KEYS = ["split_mode", "train_fraction", "split_seed"]
TRAIN_KEYS = SPLIT_KEYS + ["epochs", "learning_rate", "margin", "pairs_per_epoch",
                           "augment", "max_rotation_deg", "scale_lo", "scale_hi",
                           "train_seed", "input_size", "embedding_dim", "conv_blocks",
                           "model_seed"]


def _split_spec(values: dict[str, str]) -> SplitSpec:
    return SplitSpec(mode=values.get("split_mode", "by_identity"),
                     train_fraction=coerce_float(values, "train_fraction", 0.8),
                     seed=coerce_int(values, "split_seed", 0))


def cmd_train(args) -> int:
    values = _effective(args, TRAIN_KEYS)
    spec = _split_spec(values)
    aug = AugParams(max_rotation_deg=coerce_float(values, "max_rotation_deg", 10.0),
                    scale_range=(coerce_float(values, "scale_lo", 0.9),
                                 coerce_float(values, "scale_hi", 1.1)),
                    enabled=coerce_bool(values, "augment", True))
    tconfig = TrainConfig(epochs=coerce_int(values, "epochs", 300),
                          learning_rate=coerce_float(values, "learning_rate", 0.01),
                          margin=coerce_float(values, "margin", 1.0),
                          pairs_per_epoch=coerce_int(values, "pairs_per_epoch", None),
                          augmentation=aug,
                          seed=coerce_int(values, "train_seed", 0))
    blocks = _parse_blocks(values["conv_blocks"]) if "conv_blocks" in values \
        else EncoderConfig().conv_blocks
    econfig = EncoderConfig(input_size=coerce_int(values, "input_size", 64),
                            conv_blocks=blocks,
                            embedding_dim=coerce_int(values, "embedding_dim", 64),
                            seed=coerce_int(values, "model_seed", 0))
    echo = dict(values)
    echo.update({
        "split_mode": spec.mode, "train_fraction": repr(spec.train_fraction),
        "split_seed": str(spec.seed), "epochs": str(tconfig.epochs),
        "learning_rate": repr(tconfig.learning_rate), "margin": repr(tconfig.margin),
        "pairs_per_epoch": str(tconfig.pairs_per_epoch or "auto"),
        "augment": str(aug.enabled).lower(),
        "max_rotation_deg": repr(aug.max_rotation_deg),
        "scale_lo": repr(aug.scale_range[0]), "scale_hi": repr(aug.scale_range[1]),
        "train_seed": str(tconfig.seed), "input_size": str(econfig.input_size),
        "embedding_dim": str(econfig.embedding_dim),
        "conv_blocks": ",".join("x".join(str(d) for d in b) for b in econfig.conv_blocks),
        "model_seed": str(econfig.seed)})
    _echo(echo)

    manifest = read_manifest(args.manifest)
    train_set, _test_set = split_dataset(manifest, spec)
    dataset = train_set.load_all()
    params = build_encoder(econfig)
    params, history = train(tconfig, dataset, params)
    save_params(params, args.model_out)
    if args.history_out:
        write_history_csv(history, args.history_out)
    last = history.mean_loss[-1] if history.mean_loss else float("nan")
    print(f"trained {tconfig.epochs} epochs on {len(dataset)} images; final mean loss {last:.6f}")
    print(f"model written to {args.model_out}")
    return 0


EVAL_KEYS = SPLIT_KEYS + ["eval_pairs", "eval_seed", "tau", "criterion", "n_thresholds"]


def cmd_eval(args) -> int:
    values = _effective(args, EVAL_KEYS)
    spec = _split_spec(values)
    n_pairs = coerce_int(values, "eval_pairs", 200)
    eval_seed = coerce_int(values, "eval_seed", 0)
    tau = coerce_float(values, "tau", None)
    criterion = values.get("criterion", "max_f1")
    n_thresholds = coerce_int(values, "n_thresholds", 101)
    echo = dict(values)
    echo.update({"split_mode": spec.mode, "train_fraction": repr(spec.train_fraction),
                 "split_seed": str(spec.seed), "eval_pairs": str(n_pairs),
                 "eval_seed": str(eval_seed), "criterion": criterion,
                 "n_thresholds": str(n_thresholds),
                 "tau": "auto" if tau is None else repr(tau)})
    _echo(echo)

    manifest = read_manifest(args.manifest)
    _train_set, test_set = split_dataset(manifest, spec)
    params = load_params(args.model)
    labels = [test_set[i].subject_id for i in range(len(test_set))]
    pairs = make_pairs(labels, n_pairs, eval_seed)
    if tau is None:
        distances, truths = pair_distances(params, test_set, pairs)
        tau = select_threshold(distances, truths, criterion, n_thresholds)
    report = evaluate(params, test_set, pairs, tau, n_thresholds)
    print(format_report(report))
    if args.report_out:
        write_report_csv(report, args.report_out)
        print(f"report written to {args.report_out}")
    return 0


def cmd_validate_camera(args) -> int:
    profile = load_camera_profile(args.profile)
    findings = validate_camera(profile)
    for f in findings:
        print(f"{f.level} {f.rule}: {f.message}")
    if not findings:
        print("OK: profile meets all thermal-biometric thresholds")
    return 1 if any(f.level == "FAIL" for f in findings) else 0


def _load_probe(path):
    fmt = "csv" if str(path).lower().endswith(".csv") else "pgm16"
    return load_thermogram(path, fmt)


def cmd_enroll(args) -> int:
    params = load_params(args.model)
    gallery = load_gallery(args.gallery) if Path(args.gallery).exists() else Gallery()
    probes = [_load_probe(p) for p in args.probes]
    gallery = enroll(gallery, args.subject, probes, params)
    save_gallery(gallery, args.gallery)
    print(f"enrolled {len(probes)} probes for {args.subject}; "
          f"gallery now holds {len(gallery.entries)} subjects")
    return 0


def cmd_verify(args) -> int:
    params = load_params(args.model)
    gallery = load_gallery(args.gallery)
    accepted, distance = verify(gallery, args.subject, _load_probe(args.probe), params,
                                args.tau, args.match_rule)
    print(f"{'ACCEPT' if accepted else 'REJECT'} {args.subject} distance {distance:.6f}")
    return 0


def cmd_identify(args) -> int:
    params = load_params(args.model)
    gallery = load_gallery(args.gallery)
    subject = identify(gallery, _load_probe(args.probe), params, args.tau, args.match_rule)
    print(subject if subject is not None else "UNKNOWN")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermoface",
                                     description="Thermal face verification sandbox")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic thermogram dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--n-identities", dest="n_identities", type=int)
    p.add_argument("--frames-per-identity", dest="frames_per_identity", type=int)
    p.add_argument("--image-size", dest="image_size", type=int)
    p.add_argument("--vessel-count", dest="vessel_count", type=int)
    p.add_argument("--session-noise-mk", dest="session_noise_mk", type=float)
    p.add_argument("--ambient-drift-c", dest="ambient_drift_c", type=float)
    p.add_argument("--glasses-probability", dest="glasses_probability", type=float)
    p.add_argument("--warp-amplitude-px", dest="warp_amplitude_px", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the encoder on a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model-out", dest="model_out", required=True)
    p.add_argument("--history-out", dest="history_out")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--margin", type=float)
    p.add_argument("--pairs-per-epoch", dest="pairs_per_epoch", type=int)
    p.add_argument("--augment", choices=["true", "false"])
    p.add_argument("--max-rotation-deg", dest="max_rotation_deg", type=float)
    p.add_argument("--scale-lo", dest="scale_lo", type=float)
    p.add_argument("--scale-hi", dest="scale_hi", type=float)
    p.add_argument("--train-seed", dest="train_seed", type=int)
    p.add_argument("--split-mode", dest="split_mode", choices=["by_image", "by_identity"])
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--split-seed", dest="split_seed", type=int)
    p.add_argument("--input-size", dest="input_size", type=int)
    p.add_argument("--embedding-dim", dest="embedding_dim", type=int)
    p.add_argument("--conv-blocks", dest="conv_blocks",
                   help="e.g. 8x5x2,16x3x2,32x3x2 (channels x kernel x pool)")
    p.add_argument("--model-seed", dest="model_seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on the held-out split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report-out", dest="report_out")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--split-mode", dest="split_mode", choices=["by_image", "by_identity"])
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--split-seed", dest="split_seed", type=int)
    p.add_argument("--eval-pairs", dest="eval_pairs", type=int)
    p.add_argument("--eval-seed", dest="eval_seed", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--criterion", choices=["max_f1", "eer"])
    p.add_argument("--n-thresholds", dest="n_thresholds", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("validate-camera", help="check a camera profile file")
    p.add_argument("--profile", required=True)
    p.set_defaults(func=cmd_validate_camera)

    p = sub.add_parser("enroll", help="add probe images for a subject to a gallery")
    p.add_argument("--gallery", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--probes", nargs="+", required=True)
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("verify", help="1:1 check of a probe against one subject")
    p.add_argument("--gallery", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--probe", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--match-rule", dest="match_rule", choices=["nearest", "centroid"],
                   default="nearest")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("identify", help="1:N open-set search for a probe")
    p.add_argument("--gallery", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--probe", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--match-rule", dest="match_rule", choices=["nearest", "centroid"],
                   default="nearest")
    p.set_defaults(func=cmd_identify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except tuple(cls for cls, _ in EXIT_CODES) as e:
        for cls, code in EXIT_CODES:
            if isinstance(e, cls):
                print(f"error: {e}", file=sys.stderr)
                return code
        raise  # unreachable
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except ThermofaceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
