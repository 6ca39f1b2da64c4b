"""Bridge entry point."""

from __future__ import annotations

import argparse
import logging

from .server import BridgeConfig, BridgeServer


def main(argv=None):
    parser = argparse.ArgumentParser(description="sketchguide model bridge")
    parser.add_argument("--listen", default="127.0.0.1:8876", metavar="HOST:PORT")
    parser.add_argument("--precision", choices=["float32", "float16"], default="float32")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    config = BridgeConfig(listen=args.listen, precision=args.precision,
                          seed=args.seed, max_workers=args.workers)
    BridgeServer(config).serve_forever()


if __name__ == "__main__":
    main()
