"""Command-line launcher: model-adapter --checkpoint model.pt --shape 3,32,32"""

import argparse
import sys

from .config import AdapterConfig
from .service import serve


def parse_shape(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(d) for d in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad shape {text!r}; expected e.g. 3,32,32")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="model-adapter",
        description="Serve a TorchScript classifier checkpoint as a hard-label oracle",
    )
    parser.add_argument("--checkpoint", required=True, help="TorchScript .pt file")
    parser.add_argument("--shape", required=True, type=parse_shape,
                        help="per-sample input shape, comma separated")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--batch-cap", type=int, default=256)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = AdapterConfig(
            checkpoint=args.checkpoint, input_shape=args.shape,
            device=args.device, host=args.host, port=args.port,
            batch_cap=args.batch_cap,
        )
        serve(cfg)
    except (RuntimeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
