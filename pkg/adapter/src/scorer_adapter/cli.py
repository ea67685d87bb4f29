"""Entry point: load one metric model (or stub) and serve until stdin closes.

One process serves one model; compose several processes for summed fitness
functions. A model that cannot be loaded exits with status 1 before any
response is written.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .service import AdapterConfig, build_scorer, make_http_server, serve_stdio


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scorer-adapter",
        description="Serve an MT metric over the one-line JSON batch protocol.")
    parser.add_argument("--version", action="version",
                        version=f"scorer-adapter {__version__}")
    parser.add_argument("--model", required=True,
                        help="model name, or stub:<rule> for a deterministic stub")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--http", type=int, metavar="PORT",
                        help="serve POST /score on this port instead of stdio")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = AdapterConfig(model_name=args.model, device=args.device,
                               batch_size=args.batch_size)
        scorer = build_scorer(config)
    except (ValueError, RuntimeError) as exc:
        print(f"scorer-adapter: {exc}", file=sys.stderr)
        return 1
    if args.http is not None:
        server = make_http_server(scorer, args.http)
        print(f"[scorer-adapter] serving {scorer.name} on port "
              f"{server.server_address[1]}", file=sys.stderr)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
        return 0
    serve_stdio(scorer)
    return 0


if __name__ == "__main__":
    sys.exit(main())
