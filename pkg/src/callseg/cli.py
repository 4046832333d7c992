"""Command-line entry point for the whole pipeline.

One binary, six subcommands: features, prepare, synth, train, evaluate,
analyze. Exit codes: 0 success, 1 internal failure, 2 invalid input or
configuration. Every command echoes its effective configuration as a JSON
line so a run can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .analyze import analyze_call
from .audio import load_audio
from .dbas import CorpusManifest, prepare_corpus, read_calls_csv, read_segments_csv
from .errors import CallsegError, DataError
from .features import load_features, log_mel_spectrogram, save_features
from .metrics import confusion_to_csv, scores_to_json
from .model import ModelConfig, build_crnn, label_names, load_checkpoint, save_checkpoint
from .synth import SynthSpec, synth_corpus
from .training import TrainConfig, evaluate, scan_corpus, train


def _echo(command: str, payload: dict) -> None:
    print(json.dumps({"command": command, "effective_config": payload}, sort_keys=True))


def _cmd_features(args) -> int:
    _echo("features", {"in": args.wav, "out": args.out, "rate": args.rate,
                       "normalize": not args.no_normalize})
    buffer = load_audio(args.wav, expected_rate=args.rate)
    spec = log_mel_spectrogram(buffer)
    save_features(args.out, spec.values)
    print(f"wrote {args.out} shape {spec.values.shape}")
    return 0


def _cmd_prepare(args) -> int:
    _echo("prepare", {"segments": args.segments, "calls": args.calls, "audio": args.audio,
                      "out": args.out, "val_fraction": args.val_fraction, "seed": args.seed,
                      "utterance_seconds": args.utterance_seconds})
    calls = read_calls_csv(args.calls)
    segments_by_call = {}
    for call in calls:
        path = os.path.join(args.segments, f"{call.call_id}.csv")
        if os.path.isfile(path):
            segments_by_call[call.call_id] = read_segments_csv(path)

    def loader(call):
        return load_audio(os.path.join(args.audio, call.audio_path))

    result = prepare_corpus(
        calls, segments_by_call, loader, args.out,
        val_fraction=args.val_fraction, seed=args.seed,
        utterance_seconds=args.utterance_seconds,
    )
    for call_id, reason in result.rejections:
        print(f"rejected {call_id}: {reason}")
    for speaker in sorted(result.dropped_speakers):
        print(f"dropped speaker {speaker}: inconsistent gender labels")
    if result.manifest is None:
        print("no utterances produced")
        return 0
    _print_manifest(result.manifest)
    return 0


def _print_manifest(manifest: CorpusManifest) -> None:
    for split in sorted(manifest.splits):
        node = manifest.splits[split]
        print(f"{split}: {node['speakers']} speakers, {node['utterances']} utterances")
        for role in sorted(node["classes"]):
            cls = node["classes"][role]
            genders = ", ".join(
                f"{g}: {v['speakers']}-{v['utterances']}"
                for g, v in sorted(cls["genders"].items())
            )
            print(f"  {role}: {cls['speakers']} speakers, {cls['utterances']} utterances ({genders})")


def _cmd_synth(args) -> int:
    spec = SynthSpec.from_json_file(args.spec)
    _echo("synth", {"spec": spec.to_dict(), "seed": args.seed, "out": args.out})
    manifest = synth_corpus(spec, args.seed, args.out)
    _print_manifest(manifest)
    return 0


def _parse_int_list(text: str, expected: int, flag: str):
    parts = [int(p) for p in text.split(",")]
    if len(parts) != expected:
        raise DataError(f"{flag} needs {expected} comma-separated integers, got {text!r}")
    return parts


def _resolve_train_config(args):
    file_cfg = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    model_cfg = dict(file_cfg.get("model", {}))
    train_cfg = dict(file_cfg.get("train", {}))

    if args.classes is not None:
        model_cfg["n_classes"] = args.classes
    if args.rnn is not None:
        model_cfg["rnn_kind"] = args.rnn
    if args.filters is not None:
        model_cfg["conv_filters"] = _parse_int_list(args.filters, 4, "--filters")
    if args.hidden is not None:
        model_cfg["rnn_hidden"] = _parse_int_list(args.hidden, 2, "--hidden")
    if args.dropout is not None:
        model_cfg["dropout_p"] = args.dropout

    for flag, key in (
        ("learning_rate", "learning_rate"), ("batch_size", "batch_size"),
        ("epochs", "max_epochs"), ("patience", "patience"), ("seed", "seed"),
    ):
        value = getattr(args, flag)
        if value is not None:
            train_cfg[key] = value
    if args.no_normalize:
        train_cfg["normalize"] = False

    if "input_shape" not in model_cfg:
        items = scan_corpus(args.corpus, "train")
        if not items:
            raise DataError(f"no training data under {args.corpus}")
        model_cfg["input_shape"] = list(load_features(items[0].path).shape)

    return ModelConfig.from_dict({**ModelConfig().to_dict(), **model_cfg}), \
        TrainConfig.from_dict({**TrainConfig().to_dict(), **train_cfg})


def _cmd_train(args) -> int:
    model_config, train_config = _resolve_train_config(args)
    _echo("train", {"corpus": args.corpus, "out": args.out,
                    "model": model_config.to_dict(), "train": train_config.to_dict()})
    model = build_crnn(model_config, seed=train_config.seed)
    model, history = train(model, args.corpus, train_config)
    save_checkpoint(model, args.out)
    history_path = args.history or args.out + ".history.csv"
    history.save_csv(history_path)
    print(
        f"trained {len(history)} epochs; best epoch {history.best_epoch} "
        f"val_acc {history.val_acc[history.best_epoch - 1]:.4f}; "
        f"checkpoint {args.out}; history {history_path}"
    )
    return 0


def _cmd_evaluate(args) -> int:
    _echo("evaluate", {"corpus": args.corpus, "split": args.split, "model": args.model,
                       "out": args.out, "confusion_csv": args.confusion_csv})
    model = load_checkpoint(args.model)
    result = evaluate(model, args.corpus, args.split)
    names = label_names(model.config.n_classes)
    report = scores_to_json(result.confusion, names)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report + "\n")
    if args.confusion_csv:
        with open(args.confusion_csv, "w") as fh:
            fh.write(confusion_to_csv(result.confusion, names))
    print(report)
    print(f"loss {result.loss:.6f} accuracy {result.accuracy:.6f}")
    return 0


def _cmd_analyze(args) -> int:
    _echo("analyze", {"wav": args.wav, "segments": args.segments, "model": args.model,
                      "out": args.out, "shift": args.shift})
    model = load_checkpoint(args.model)
    audio = load_audio(args.wav)
    segments = read_segments_csv(args.segments)
    analysis = analyze_call(audio, segments, model, shift_seconds=args.shift,
                            keep_window_probs=args.windows_csv is not None)
    report = analysis.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report + "\n")
    if args.windows_csv:
        with open(args.windows_csv, "w") as fh:
            fh.write(analysis.windows_csv())
    print(report)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="callseg",
        description="Call-center audio segment classification pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="extract a log-mel feature file from a WAV")
    p.add_argument("--in", dest="wav", required=True, help="input mono PCM WAV")
    p.add_argument("--out", required=True, help="output NPY feature file")
    p.add_argument("--rate", type=int, default=8000, help="required sample rate")
    p.add_argument("--no-normalize", action="store_true",
                   help="accepted for compatibility; extraction always writes raw "
                        "log-mel values (z-score stats live in checkpoints)")
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("prepare", help="run the annotation pipeline into a corpus tree")
    p.add_argument("--segments", required=True, help="directory of <call_id>.csv segment files")
    p.add_argument("--calls", required=True, help="call metadata CSV")
    p.add_argument("--audio", required=True, help="directory audio_path entries are relative to")
    p.add_argument("--out", required=True, help="corpus root to write")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--utterance-seconds", type=float, default=10.0)
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("synth", help="generate a deterministic synthetic corpus")
    p.add_argument("--spec", required=True, help="JSON corpus sizing spec")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="corpus root to write")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.add_argument("--config", help="JSON config file with model/train sections")
    p.add_argument("--classes", type=int, choices=(2, 4))
    p.add_argument("--rnn", choices=("gru", "lstm"))
    p.add_argument("--filters", help="four conv filter counts, comma separated")
    p.add_argument("--hidden", help="two recurrent hidden sizes, comma separated")
    p.add_argument("--dropout", type=float)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--history", help="history CSV path (default: <out>.history.csv)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a corpus split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="validation")
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--confusion-csv", help="confusion matrix CSV path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("analyze", help="classify each speaker in one call")
    p.add_argument("--wav", required=True)
    p.add_argument("--segments", required=True, help="segment annotation CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--windows-csv", help="per-window probability CSV path")
    p.add_argument("--shift", type=float, default=1.0, help="window shift in seconds")
    p.set_defaults(func=_cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CallsegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
