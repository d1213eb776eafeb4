"""
qubo_testgen.remote - Client for a remote annealing service

The service takes one POST carrying {qubo: <interchange document>,
num_reads} and answers {samples: [{bits, energy, occurrences}],
timing: {access_seconds}}. Every returned energy is recomputed locally
before the result is accepted.
"""

import logging
import math
import threading
import time
from typing import Dict, Optional

import numpy as np
import requests

from .errors import IntegrityError, TransportError
from .qubo import Qubo, Selection
from .solvers import SampleSet, Sampler
from .utils import SeedLike

logger = logging.getLogger(__name__)

ENERGY_TOLERANCE = 1e-6


def _decode_response(q: Qubo, body: Dict[str, object]) -> tuple:
    """Validate a response body and return (samples, access_seconds)"""
    try:
        raw_samples = body['samples']
        access = float(body.get('timing', {}).get('access_seconds', 0.0))
    except (KeyError, TypeError, AttributeError, ValueError) as e:
        raise IntegrityError(f"Malformed sampler response: {e}") from None
    if not raw_samples:
        raise IntegrityError("Sampler response contains no samples")

    merged: Dict[tuple, list] = {}
    for k, raw in enumerate(raw_samples):
        try:
            bits = np.asarray(raw['bits'], dtype=np.int8)
            reported = float(raw['energy'])
            occurrences = int(raw.get('occurrences', 1))
        except (KeyError, TypeError, ValueError) as e:
            raise IntegrityError(f"Sample {k}: malformed entry ({e})") from None
        if bits.shape != (q.n,) or np.any((bits != 0) & (bits != 1)):
            raise IntegrityError(f"Sample {k}: expected {q.n} binary values")
        local = float(q.energies(bits)[0])
        if not math.isfinite(reported) or not abs(local - reported) <= ENERGY_TOLERANCE:
            raise IntegrityError(
                f"Sample {k}: reported energy {reported!r} differs from local {local!r}")
        key = tuple(int(b) for b in bits)
        if key in merged:
            merged[key][2] += occurrences
        else:
            merged[key] = [Selection(bits), local, occurrences]
    return [tuple(v) for v in merged.values()], access


def submit_remote(q: Qubo, reads: int, endpoint: str, timeout: float = 30.0,
                  session: Optional[requests.Session] = None) -> SampleSet:
    """Send a QUBO to a remote sampler and return the validated samples"""
    payload = {'qubo': q.to_document(), 'num_reads': int(reads)}
    http = session or requests.Session()
    start = time.perf_counter()
    try:
        response = http.post(endpoint, json=payload, timeout=timeout)
    except requests.Timeout:
        raise TransportError(f"Timed out after {timeout}s waiting for {endpoint}") from None
    except requests.ConnectionError as e:
        raise TransportError(f"Cannot reach {endpoint}: {e}") from None
    finally:
        if session is None:
            http.close()
    if response.status_code >= 500:
        raise TransportError(f"{endpoint} answered {response.status_code}")
    if response.status_code >= 400:
        raise TransportError(f"{endpoint} rejected the problem ({response.status_code}): "
                             f"{response.text[:200]}", retryable=False)
    try:
        body = response.json()
    except ValueError:
        raise IntegrityError(f"{endpoint} returned a non-JSON body") from None

    samples, access = _decode_response(q, body)
    wall = time.perf_counter() - start
    logger.debug("Remote sample of n=%d: %d distinct samples, access %.4fs", q.n, len(samples), access)
    return SampleSet(samples, 'quantum_remote', wall_time=wall, solver_time=access,
                     info={'endpoint': endpoint, 'num_reads': reads})


class RemoteSampler(Sampler):
    """Sampler backed by a remote annealing service

    Each thread keeps its own HTTP session so connections are reused without
    sharing a session between threads.
    """

    name = 'quantum_remote'

    def __init__(self, endpoint: str, num_reads: int = 100, timeout: float = 30.0,
                 max_retries: int = 0):
        super().__init__(None)
        self.endpoint = endpoint
        self.num_reads = num_reads
        self.timeout = timeout
        self.max_retries = max_retries
        self._local = threading.local()

    def _session(self) -> requests.Session:
        session = getattr(self._local, 'session', None)
        if session is None:
            session = requests.Session()
            self._local.session = session
        return session

    def sample(self, q: Qubo, seed: SeedLike = None) -> SampleSet:
        attempt = 0
        while True:
            try:
                return submit_remote(q, self.num_reads, self.endpoint, self.timeout,
                                     session=self._session())
            except TransportError as e:
                if not e.retryable or attempt >= self.max_retries:
                    raise
                attempt += 1
                logger.warning("Retrying %s after transport error (%d/%d): %s",
                               self.endpoint, attempt, self.max_retries, e)

    def __repr__(self):
        return f"RemoteSampler({self.endpoint})"
