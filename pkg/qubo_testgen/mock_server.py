"""
qubo_testgen.mock_server - Local stand-in for a remote annealing service

Speaks the same protocol as qubo_testgen.remote and answers with exact or
simulated annealing results. Access times are synthetic: a fixed
programming cost plus a per-read cost.
"""

import json
import logging
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .errors import QTestGenError
from .qubo import Qubo
from .solvers import AnnealParams, solve_exact, solve_sa

logger = logging.getLogger(__name__)

PROGRAMMING_SECONDS = 0.015
READ_SECONDS = 0.0002


class MockAnnealerServer:
    """Threaded HTTP server answering sampling requests

    backend is 'exact' or 'sa'. With corrupt set, the energy of the last
    returned sample is shifted so clients can exercise their integrity check.
    """

    def __init__(self, host: str = '127.0.0.1', port: int = 0, backend: str = 'exact',
                 anneal: Optional[AnnealParams] = None, corrupt: bool = False,
                 delay: float = 0.0):
        if backend not in ('exact', 'sa'):
            raise ValueError(f"Unknown mock backend '{backend}'")
        self.backend = backend
        self.anneal = anneal or AnnealParams(num_reads=100, sweeps=200, seed=0)
        self.corrupt = corrupt
        self.delay = delay
        self.requests_served = 0
        self._server = ThreadingHTTPServer((host, port), self._handler_class())
        self._thread: Optional[threading.Thread] = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/sample"

    def answer(self, document: dict) -> dict:
        """Compute the response body for one request body"""
        q = Qubo.from_document(document['qubo'])
        reads = int(document.get('num_reads', 1))
        if self.backend == 'exact':
            result = solve_exact(q)
        else:
            params = AnnealParams(reads, self.anneal.sweeps, self.anneal.initial_temperature,
                                  self.anneal.final_temperature, self.anneal.seed)
            result = solve_sa(q, params)
        samples = [{'bits': [int(b) for b in sel.bits], 'energy': e, 'occurrences': c}
                   for sel, e, c in result.samples]
        if self.corrupt:
            samples[-1]['energy'] += 1.0
        self.requests_served += 1
        return {'samples': samples,
                'timing': {'access_seconds': PROGRAMMING_SECONDS + READ_SECONDS * reads}}

    def _handler_class(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get('Content-Length', 0))
                try:
                    document = json.loads(self.rfile.read(length))
                    body = server.answer(document)
                    status = 200
                except (ValueError, KeyError, TypeError, QTestGenError) as e:
                    body, status = {'error': str(e)}, 400
                if server.delay:
                    time.sleep(server.delay)
                data = json.dumps(body).encode('utf-8')
                self.send_response(status)
                self.send_header('Content-Type', 'application/json')
                self.send_header('Content-Length', str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, format, *args):
                logger.debug("mock annealer: " + format, *args)

        return Handler

    def start(self) -> 'MockAnnealerServer':
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        logger.info("Mock annealer (%s backend) listening on %s", self.backend, self.url)
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread:
            self._thread.join()

    def __enter__(self) -> 'MockAnnealerServer':
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
