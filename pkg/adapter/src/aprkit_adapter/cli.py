"""Adapter command line: serve a checkpoint, or fine-tune and save k checkpoints."""

from __future__ import annotations

import argparse
import sys

from . import __version__


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aprkit-adapter", description=__doc__)
    parser.add_argument("--version", action="version", version=f"aprkit-adapter {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="answer generator-protocol requests for one checkpoint")
    p.add_argument("checkpoint", help="checkpoint directory saved by finetune")
    p.add_argument("--http", type=int, default=None, metavar="PORT",
                   help="serve over HTTP instead of stdio (0 picks a free port)")
    p.add_argument("--max-new-tokens", type=int, default=None,
                   help="cap decode length below the checkpoint's max_out")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("finetune", help="train on a corpus export, saving k checkpoints")
    p.add_argument("--corpus", required=True, help="preprocessed corpus (JSONL)")
    p.add_argument("--out", required=True, help="output directory for checkpoints")
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--save-fraction", type=float, default=0.2,
                   help="fraction of an epoch between checkpoint saves (j)")
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--scheduler", choices=["constant", "linear", "cosine"],
                   default="constant")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fp16", action="store_true")
    p.add_argument("--base-model", default=None,
                   help="path to a locally available pretrained model to start from")
    p.add_argument("--max-in", type=int, default=512)
    p.add_argument("--max-out", type=int, default=256)
    p.set_defaults(func=_cmd_finetune)

    return parser


def _cmd_serve(args) -> int:
    from .serving import CheckpointBackend, serve_http, serve_stdio

    backend = CheckpointBackend(args.checkpoint, max_new_tokens=args.max_new_tokens)
    if args.http is not None:
        serve_http(backend, args.http)
    else:
        serve_stdio(backend, sys.stdin, sys.stdout)
    return 0


def _cmd_finetune(args) -> int:
    import torch

    from .training import TrainingRunConfig, finetune

    config = TrainingRunConfig(
        epochs=args.epochs,
        save_fraction=args.save_fraction,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        scheduler=args.scheduler,
        seed=args.seed,
        fp16=args.fp16,
        base_model=args.base_model,
        max_in=args.max_in,
        max_out=args.max_out,
    )
    try:
        result = finetune(args.corpus, args.out, config)
    except torch.cuda.OutOfMemoryError:
        print(
            "aprkit-adapter: out of memory; retry with a smaller --batch-size",
            file=sys.stderr,
        )
        return 3
    except RuntimeError as exc:
        if "out of memory" in str(exc).lower():
            print(
                "aprkit-adapter: out of memory; retry with a smaller --batch-size",
                file=sys.stderr,
            )
            return 3
        raise
    print(
        f"saved {len(result.checkpoint_dirs)} checkpoints; "
        f"loss {result.initial_loss:.4f} -> {result.final_loss:.4f}"
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"aprkit-adapter: error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main(sys.argv[1:]))
