#!/usr/bin/env python3
"""
mock_annealer - Serve the local stand-in for a remote annealing service
"""

import sys
import argparse
import logging
from pathlib import Path

# Add the parent directory to the path so we can import qubo_testgen
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from qubo_testgen import __version__
from qubo_testgen.mock_server import MockAnnealerServer
from qubo_testgen.solvers import AnnealParams


def main(argv=None):
    """Main function for mock_annealer tool"""
    parser = argparse.ArgumentParser(
        description="Serve a mock remote annealer over HTTP",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  mock_annealer --port 8765
  mock_annealer --backend sa --sweeps 500 --port 8765
  mock_annealer --corrupt        # answers with a wrong energy
        """
    )
    parser.add_argument('--host', default='127.0.0.1', help='Address to bind')
    parser.add_argument('--port', type=int, default=8765, help='Port to bind (0 picks one)')
    parser.add_argument('--backend', choices=['exact', 'sa'], default='sa', help='Solver answering requests')
    parser.add_argument('--sweeps', type=int, default=200, help='Annealing sweeps for the sa backend')
    parser.add_argument('--seed', type=int, default=0, help='Seed of the sa backend')
    parser.add_argument('--delay', type=float, default=0.0, help='Extra seconds before each answer')
    parser.add_argument('--corrupt', action='store_true', help='Corrupt one energy per answer')
    parser.add_argument('--debug', action='store_true', help='Enable debug output')
    parser.add_argument('--version', action='version', version=f'mock_annealer {__version__}')
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.debug else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        server = MockAnnealerServer(args.host, args.port, backend=args.backend,
                                    anneal=AnnealParams(sweeps=args.sweeps, seed=args.seed),
                                    corrupt=args.corrupt, delay=args.delay)
    except OSError as e:
        print(f"Error: cannot bind {args.host}:{args.port}: {e}", file=sys.stderr)
        sys.exit(1)
    print(f"Serving on {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()


if __name__ == '__main__':
    main()
