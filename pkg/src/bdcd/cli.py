"""Command-line interface: synth / train / eval / predict / export-curves / serve.

Exit codes: 0 success, 1 runtime error, 2 usage error.  The BDCD_LOG
environment variable (error|info|debug) sets log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .data import (AugmentConfig, CLASS_NAMES, load_labeled_dataset, resize_raster,
                   split_dataset)
from .errors import BdcdError
from .metrics import (export_curves, read_metrics_jsonl, report_as_csv, report_as_dict,
                      report_as_text)
from .model import build_model, predict
from .modelfile import load_model, model_info, save_model
from .server import decode_image_bytes, serve
from .train import TrainConfig, metrics_json_line, train

log = logging.getLogger("bdcd")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = _LOG_LEVELS.get(os.environ.get("BDCD_LOG", "info").lower(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdcd", description="banknote denomination classifier toolkit")
    parser.add_argument("--version", action="version", version=f"bdcd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset tree")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--per-class", type=int, required=True, help="images per class")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train a model on a dataset directory")
    p.add_argument("--data", required=True, help="dataset root (class subdirectories)")
    p.add_argument("--out", required=True, help="output .bdcm model file")
    p.add_argument("--val-split", type=float, default=0.2)
    p.add_argument("--epochs", type=int, default=16)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.0001)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--image-size", type=int, default=256)
    p.add_argument("--augment", action="store_true", help="enable data augmentation")
    p.add_argument("--early-stop-patience", type=int, default=None)
    p.add_argument("--log", default=None, help="write per-epoch JSON lines here")

    p = sub.add_parser("eval", help="evaluate a model on a dataset directory")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")

    p = sub.add_parser("predict", help="classify image files")
    p.add_argument("--model", required=True)
    p.add_argument("images", nargs="+", metavar="IMAGE")
    p.add_argument("--top-k", type=int, default=3)

    p = sub.add_parser("export-curves", help="convert a JSONL training log to CSV")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="run the local inference service")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    return parser


def _cmd_synth(args) -> int:
    from .synth import synth_generate
    count = synth_generate(args.out, args.per_class, args.seed)
    print(f"wrote {count} images under {args.out}")
    return 0


def _cmd_train(args) -> int:
    items = load_labeled_dataset(args.data)
    train_set, val_set = split_dataset(items, ratio=1.0 - args.val_split, seed=args.seed)
    log.info("dataset: %d train / %d val", len(train_set), len(val_set))
    cfg = TrainConfig(
        learning_rate=args.lr, batch_size=args.batch_size, epochs=args.epochs,
        seed=args.seed, augment=AugmentConfig() if args.augment else None,
        early_stop_patience=args.early_stop_patience, image_size=args.image_size)
    model = build_model(CLASS_NAMES, image_size=args.image_size, seed=args.seed)

    log_fh = open(args.log, "w") if args.log else None
    try:
        def on_epoch(m):
            line = metrics_json_line(m)
            print(line, flush=True)
            if log_fh:
                log_fh.write(line + "\n")
                log_fh.flush()

        model, history = train(model, train_set, val_set, cfg, on_epoch=on_epoch)
    finally:
        if log_fh:
            log_fh.close()
    save_model(model, args.out)
    log.info("saved model to %s after %d epochs", args.out, len(history))
    return 0


def _cmd_eval(args) -> int:
    from .metrics import evaluate
    model = load_model(args.model)
    items = load_labeled_dataset(args.data)
    size = model.input_shape[0]
    items = [type(it)(resize_raster(it.pixels, size, size), it.label, it.source)
             if it.pixels.shape[:2] != (size, size) else it for it in items]
    report = evaluate(model, items)
    if args.format == "json":
        import json as _json
        print(_json.dumps(report_as_dict(report), indent=2))
    elif args.format == "csv":
        sys.stdout.write(report_as_csv(report))
    else:
        print(report_as_text(report))
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    failures = 0
    for image_path in args.images:
        try:
            raster = decode_image_bytes(Path(image_path).read_bytes())
        except (OSError, BdcdError) as exc:
            print(f"{image_path}: error: {exc}", file=sys.stderr)
            failures += 1
            continue
        pred = predict(model, raster)
        order = pred.probabilities.argsort()[::-1][:max(1, args.top_k)]
        top = " ".join(f"{model.class_labels[i]}:{pred.probabilities[i]:.4f}" for i in order)
        print(f"{image_path}\t{pred.label}\t{pred.confidence:.4f}\t{top}")
    return 1 if failures else 0


def _cmd_export_curves(args) -> int:
    export_curves(read_metrics_jsonl(args.log), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_serve(args) -> int:
    info = model_info(args.model)
    log.info("model %s: %d parameters", info["model_id"], info["parameter_count"])
    try:
        serve(args.model, args.host, args.port)
    except KeyboardInterrupt:
        log.info("interrupted, shutting down")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "export-curves": _cmd_export_curves,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (BdcdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
