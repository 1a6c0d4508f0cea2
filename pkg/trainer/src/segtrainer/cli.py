"""Command-line front end: split, train, predict."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .data import read_manifest, read_split, split, write_split
from .errors import TrainerError
from .predict import load_checkpoint, predict_files
from .spec import TrainSpec
from .train import train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ERROR = 2

_OVERRIDABLE = ("model", "backbone", "epochs", "lr", "seed", "batch_size")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; usage errors here are exit 1."""

    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_spec(args) -> TrainSpec:
    """Config file first, then any explicit flags on top."""
    spec = TrainSpec.from_file(args.config) if getattr(args, "config", None) else TrainSpec()
    overrides = {name: getattr(args, name)
                 for name in _OVERRIDABLE
                 if getattr(args, name, None) is not None}
    if overrides:
        spec = TrainSpec.from_dict({**spec.to_dict(), **overrides})
    return spec


def _cmd_split(args) -> int:
    spec = _load_spec(args)
    items = read_manifest(args.root)
    manifests = split(items, spec)
    out = write_split(manifests, args.out)
    print(f"split {len(items)} images: {len(manifests.train)} train, "
          f"{len(manifests.val)} val, {len(manifests.test)} test -> {out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    spec = _load_spec(args)
    root = Path(args.root)
    if args.split:
        manifests = read_split(args.split)
    else:
        manifests = split(read_manifest(root), spec)
        write_split(manifests, Path(args.out) / "split.json")
    result = train(spec, root, manifests, args.out,
                   pretrained=not args.no_pretrained)
    print(f"checkpoint {result.checkpoint}")
    print(f"curves {result.curves}")
    print(f"final val mIoU {result.final_val_miou:.4f}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    model, spec = load_checkpoint(args.checkpoint)
    written = predict_files(model, spec, args.frames, args.out)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="segtrainer",
        description="fine-tune segmentation models on thermal frame/mask catalogs",
    )
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("split", help="cut a catalog into train/val/test manifests")
    p.add_argument("root", help="dataset root containing catalog.json")
    p.add_argument("--out", required=True, help="split manifest JSON")
    p.add_argument("--config", help="TrainSpec JSON")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="run the training protocol")
    p.add_argument("root", help="dataset root containing catalog.json")
    p.add_argument("--out", required=True, help="output root; artifacts go to <out>/<model>/")
    p.add_argument("--split", help="existing split manifest (default: cut one now)")
    p.add_argument("--config", help="TrainSpec JSON")
    p.add_argument("--model", choices=("unet", "fpn", "pspnet", "deeplabv3", "deeplabv3plus"))
    p.add_argument("--backbone")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-pretrained", action="store_true",
                   help="skip the pretrained-weight fetch; start from random init")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="write predicted masks for loose frames")
    p.add_argument("frames", nargs="+")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_predict)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except TrainerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
