"""Hard-label oracle access: in-process mock rules and a remote wire client.

Every backend returns class indices only. A synchronized single-flight cache
guarantees that identical sample bytes are evaluated exactly once per session,
which keeps query accounting deterministic even with concurrent callers.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from .corpus import SampleSet
from .errors import OracleError

DEFAULT_BATCH_SIZE = 64
DEFAULT_WORKERS = 4
RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 0.2

MOCK_KINDS = ("region-threshold", "leaf-affinity", "uniform-random")


def sample_digest(row: np.ndarray) -> bytes:
    """64-bit digest of raw sample bytes; collisions negligible at desk scale."""
    return hashlib.blake2b(np.ascontiguousarray(row).tobytes(), digest_size=8).digest()


def _hash_labels(rows: np.ndarray, num_classes: int, seed: int, salt: bytes) -> np.ndarray:
    prefix = salt + int(seed).to_bytes(8, "little", signed=True)
    out = np.empty(rows.shape[0], dtype=np.int64)
    for i in range(rows.shape[0]):
        digest = hashlib.blake2b(prefix + rows[i].tobytes(), digest_size=8).digest()
        out[i] = int.from_bytes(digest, "little") % num_classes
    return out


@dataclass(frozen=True)
class MockRule:
    """Deterministic labeling rule: label depends only on (kind, params, seed, sample)."""

    kind: str
    num_classes: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MOCK_KINDS:
            raise OracleError(f"unknown mock rule kind {self.kind!r}")
        if self.num_classes < 1:
            raise OracleError("mock rule needs a positive class count")

    def apply(self, rows: np.ndarray) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=np.float32)
        if self.kind == "region-threshold":
            labels = np.floor(rows.mean(axis=1).astype(np.float64) * self.num_classes)
            return np.clip(labels, 0, self.num_classes - 1).astype(np.int64)
        if self.kind == "uniform-random":
            return _hash_labels(rows, self.num_classes, self.seed, b"uniform")
        return self._leaf_affinity(rows)

    def _leaf_affinity(self, rows: np.ndarray) -> np.ndarray:
        grid = int(self.params["grid_side"])
        ax, ay = self.params.get("axes", (0, 1))
        cell_classes = {int(k): int(v) for k, v in self.params["cell_classes"].items()}
        noise_rate = float(self.params.get("noise_rate", 0.0))

        cx = np.clip(np.floor(rows[:, ax].astype(np.float64) * grid), 0, grid - 1)
        cy = np.clip(np.floor(rows[:, ay].astype(np.float64) * grid), 0, grid - 1)
        cells = (cy * grid + cx).astype(np.int64)

        labels = _hash_labels(rows, self.num_classes, self.seed, b"noise-class")
        known = np.array([cell_classes.get(int(c), -1) for c in cells], dtype=np.int64)
        hit = known >= 0
        if noise_rate > 0.0 and hit.any():
            coins = _hash_labels(rows[hit], 2 ** 31, self.seed, b"noise-coin")
            keep = coins.astype(np.float64) / 2 ** 31 >= noise_rate
            idx = np.flatnonzero(hit)
            labels[idx[keep]] = known[idx[keep]]
        elif hit.any():
            labels[hit] = known[hit]
        return labels

    def to_json(self) -> str:
        return json.dumps(
            {"kind": self.kind, "num_classes": self.num_classes,
             "seed": self.seed, "params": self.params},
            indent=2, sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "MockRule":
        try:
            raw = json.loads(text)
            return MockRule(kind=raw["kind"], num_classes=int(raw["num_classes"]),
                            seed=int(raw.get("seed", 0)), params=raw.get("params", {}))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise OracleError(f"malformed mock rule: {e}") from e


class _MockBackend:
    def __init__(self, rule: MockRule):
        self.rule = rule

    def num_classes(self) -> int:
        return self.rule.num_classes

    def classify(self, rows: np.ndarray) -> np.ndarray:
        return self.rule.apply(rows)


class _RemoteBackend:
    """Client for the classification wire protocol, with retry and backoff."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()

    def _request(self, method: str, path: str, payload=None):
        last_error = None
        for attempt in range(RETRY_ATTEMPTS):
            if attempt:
                time.sleep(RETRY_BASE_DELAY * 2 ** (attempt - 1))
            try:
                resp = self._session.request(
                    method, self.url + path, json=payload, timeout=self.timeout
                )
            except requests.RequestException as e:
                last_error = f"transport error: {e}"
                continue
            if resp.status_code != 200:
                last_error = f"HTTP {resp.status_code} from {path}"
                continue
            try:
                return resp.json()
            except ValueError:
                last_error = f"malformed body from {path}"
                continue
        raise OracleError(f"oracle unreachable after {RETRY_ATTEMPTS} attempts: {last_error}")

    def num_classes(self) -> int:
        body = self._request("GET", "/v1/info")
        try:
            n = int(body["num_classes"])
        except (KeyError, TypeError, ValueError):
            raise OracleError(f"protocol violation: bad /v1/info body {body!r}")
        if n < 1:
            raise OracleError(f"protocol violation: num_classes={n}")
        return n

    def classify(self, rows: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
        payload = {"shape": list(shape), "samples": rows.astype(np.float32).tolist()}
        body = self._request("POST", "/v1/classify", payload)
        labels = body.get("labels") if isinstance(body, dict) else None
        if not isinstance(labels, list) or len(labels) != rows.shape[0]:
            raise OracleError("protocol violation: bad /v1/classify body")
        return np.asarray(labels, dtype=np.int64)


class Oracle:
    """Session handle over a hard-label backend with caching and accounting.

    query_count advances only on cache misses; identical sample bytes always
    map to the identical label within one session.
    """

    def __init__(self, backend, *, budget: int | None = None, cache: bool = True,
                 batch_size: int = DEFAULT_BATCH_SIZE, workers: int = DEFAULT_WORKERS,
                 spec: str = ""):
        self._backend = backend
        self.budget = budget
        self.batch_size = batch_size
        self.workers = max(1, workers)
        self.spec = spec
        self._cache: dict[bytes, int] | None = {} if cache else None
        self._pending: dict[bytes, threading.Event] = {}
        self._lock = threading.Lock()
        self._query_count = 0
        self._num_classes: int | None = None

    # -- info -------------------------------------------------------------------

    def info(self) -> int:
        """Class count of the target model; constant for the session."""
        if self._num_classes is None:
            n = self._backend.num_classes()
            if n < 1:
                raise OracleError(f"backend reports invalid class count {n}")
            self._num_classes = n
        return self._num_classes

    @property
    def num_classes(self) -> int:
        return self.info()

    @property
    def query_count(self) -> int:
        return self._query_count

    # -- classification ------------------------------------------------------------

    def classify_batch(self, batch: SampleSet | np.ndarray) -> np.ndarray:
        """One label in [0, n) per sample, positional. Misses hit the backend once."""
        if isinstance(batch, SampleSet):
            rows, shape = batch.data, batch.shape
        else:
            rows = np.asarray(batch, dtype=np.float32)
            shape = (rows.shape[1],)
        if rows.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        rows = np.ascontiguousarray(rows, dtype=np.float32)

        if self._cache is None:
            self._charge(rows.shape[0])
            return self._evaluate(rows, shape)

        digests = [sample_digest(rows[i]) for i in range(rows.shape[0])]
        owned: dict[bytes, int] = {}
        waiting: list[threading.Event] = []
        with self._lock:
            for i, dig in enumerate(digests):
                if dig in self._cache or dig in owned:
                    continue
                if dig in self._pending:
                    waiting.append(self._pending[dig])
                else:
                    self._pending[dig] = threading.Event()
                    owned[dig] = i

        if owned:
            try:
                self._charge(len(owned))
                rows_to_eval = rows[list(owned.values())]
                labels = self._evaluate(rows_to_eval, shape)
            except BaseException:
                with self._lock:
                    for dig in owned:
                        self._pending.pop(dig).set()
                raise
            with self._lock:
                for dig, label in zip(owned, labels):
                    self._cache[dig] = int(label)
                    self._pending.pop(dig).set()

        for event in waiting:
            event.wait()

        out = np.empty(rows.shape[0], dtype=np.int64)
        with self._lock:
            for i, dig in enumerate(digests):
                if dig not in self._cache:
                    raise OracleError("concurrent classification of this sample failed")
                out[i] = self._cache[dig]
        return out

    def _charge(self, misses: int) -> None:
        with self._lock:
            if self.budget is not None and self._query_count + misses > self.budget:
                raise OracleError(
                    f"query budget exhausted ({self._query_count}+{misses} > {self.budget})"
                )
            self._query_count += misses

    def _evaluate(self, rows: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
        n = self.info()
        chunks = [rows[i:i + self.batch_size] for i in range(0, rows.shape[0], self.batch_size)]
        if isinstance(self._backend, _RemoteBackend):
            if len(chunks) > 1 and self.workers > 1:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    parts = list(pool.map(lambda c: self._backend.classify(c, shape), chunks))
            else:
                parts = [self._backend.classify(c, shape) for c in chunks]
        else:
            parts = [self._backend.classify(c) for c in chunks]
        labels = np.concatenate(parts)
        if labels.size and (labels.min() < 0 or labels.max() >= n):
            raise OracleError(f"protocol violation: label outside [0,{n})")
        return labels


# -- constructors -------------------------------------------------------------------

def mock_oracle(rule: MockRule, **kwargs) -> Oracle:
    return Oracle(_MockBackend(rule), spec=kwargs.pop("spec", f"mock:{rule.kind}"), **kwargs)


def remote_oracle(url: str, **kwargs) -> Oracle:
    return Oracle(_RemoteBackend(url), spec=kwargs.pop("spec", url), **kwargs)


def parse_oracle_spec(spec: str, **kwargs) -> Oracle:
    """Build an oracle from a CLI spec: an http(s) URL, or mock:<rule.json path>,
    or an inline mock form like mock:region-threshold,n=10,seed=0."""
    if spec.startswith(("http://", "https://")):
        return remote_oracle(spec, spec=spec, **kwargs)
    if not spec.startswith("mock:"):
        raise OracleError(f"unrecognized oracle spec {spec!r}")
    body = spec[len("mock:"):]
    path = Path(body)
    if path.is_file():
        return mock_oracle(MockRule.from_json(path.read_text()), spec=spec, **kwargs)
    fields = body.split(",")
    kind = fields[0]
    opts: dict[str, str] = {}
    for item in fields[1:]:
        if "=" not in item:
            raise OracleError(f"bad mock option {item!r} in {spec!r}")
        key, value = item.split("=", 1)
        opts[key.strip()] = value.strip()
    try:
        rule = MockRule(kind=kind, num_classes=int(opts.pop("n")),
                        seed=int(opts.pop("seed", "0")), params=opts)
    except KeyError:
        raise OracleError(f"inline mock spec needs n=<classes>: {spec!r}")
    except ValueError as e:
        raise OracleError(f"bad mock spec {spec!r}: {e}")
    return mock_oracle(rule, spec=spec, **kwargs)
