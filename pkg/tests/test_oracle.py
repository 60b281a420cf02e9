"""Oracle gateway: mock rules, caching/accounting, remote protocol client."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domainscope.corpus import SampleSet
from domainscope.errors import OracleError
from domainscope.oracle import MockRule, mock_oracle, parse_oracle_spec, remote_oracle


def region_rule(n=10, seed=0):
    return MockRule(kind="region-threshold", num_classes=n, seed=seed)


def as_samples(rows):
    rows = np.asarray(rows, dtype=np.float32)
    return SampleSet((rows.shape[1],), rows)


# -- mock rules -----------------------------------------------------------------

def test_region_threshold_boundary():
    oracle = mock_oracle(region_rule())
    labels = oracle.classify_batch(as_samples(np.zeros((1, 8))))
    assert labels.tolist() == [0]


def test_region_threshold_mid():
    oracle = mock_oracle(region_rule())
    labels = oracle.classify_batch(as_samples(np.full((1, 8), 0.55)))
    assert labels.tolist() == [5]


def test_region_threshold_clamps_top():
    oracle = mock_oracle(region_rule())
    labels = oracle.classify_batch(as_samples(np.ones((1, 8))))
    assert labels.tolist() == [9]


def test_uniform_rule_deterministic():
    rule = MockRule(kind="uniform-random", num_classes=10, seed=3)
    rows = np.random.default_rng(0).random((64, 8)).astype(np.float32)
    a = rule.apply(rows)
    b = rule.apply(rows)
    assert np.array_equal(a, b)
    assert a.min() >= 0 and a.max() < 10
    # a different seed relabels
    other = MockRule(kind="uniform-random", num_classes=10, seed=4).apply(rows)
    assert not np.array_equal(a, other)


def test_rule_json_round_trip():
    rule = MockRule(kind="leaf-affinity", num_classes=3, seed=9,
                    params={"grid_side": 6, "axes": [0, 1],
                            "cell_classes": {"0": 0, "7": 2}, "noise_rate": 0.0})
    again = MockRule.from_json(rule.to_json())
    assert again == rule


def test_unknown_kind_rejected():
    with pytest.raises(OracleError, match="unknown mock rule kind"):
        MockRule(kind="nope", num_classes=2)


# -- oracle handle: info, caching, accounting, budget ---------------------------

def test_info_constant():
    oracle = mock_oracle(region_rule(n=10))
    assert oracle.info() == 10
    assert oracle.info() == 10
    assert oracle.num_classes == 10


def test_cache_counts_misses_once():
    oracle = mock_oracle(region_rule())
    row = np.full((1, 8), 0.25, dtype=np.float32)
    first = oracle.classify_batch(as_samples(row))
    second = oracle.classify_batch(as_samples(row))
    assert first.tolist() == second.tolist() == [2]
    assert oracle.query_count == 1


def test_duplicates_in_one_batch_count_once():
    oracle = mock_oracle(region_rule())
    rows = np.vstack([np.full((1, 8), 0.15)] * 5).astype(np.float32)
    labels = oracle.classify_batch(as_samples(rows))
    assert labels.tolist() == [1] * 5
    assert oracle.query_count == 1


def test_accounting_bounded_by_distinct_samples():
    oracle = mock_oracle(region_rule())
    rng = np.random.default_rng(0)
    rows = rng.random((30, 4)).astype(np.float32)
    for _ in range(3):
        oracle.classify_batch(as_samples(rows))
    assert oracle.query_count == 30


def test_cache_transparency():
    rows = np.random.default_rng(1).random((40, 6)).astype(np.float32)
    with_cache = mock_oracle(region_rule()).classify_batch(as_samples(rows))
    without = mock_oracle(region_rule(), cache=False).classify_batch(as_samples(rows))
    assert np.array_equal(with_cache, without)


def test_budget_exhaustion():
    oracle = mock_oracle(region_rule(), budget=5)
    rows = np.random.default_rng(2).random((5, 4)).astype(np.float32)
    oracle.classify_batch(as_samples(rows))
    with pytest.raises(OracleError, match="budget exhausted"):
        oracle.classify_batch(as_samples(np.random.default_rng(3).random((1, 4))))
    # cached rows still answer without spending budget
    assert oracle.classify_batch(as_samples(rows)).shape == (5,)
    assert oracle.query_count == 5


def test_concurrent_identical_batches_single_flight():
    oracle = mock_oracle(region_rule())
    rows = np.random.default_rng(7).random((64, 8)).astype(np.float32)
    results = []

    def work():
        results.append(oracle.classify_batch(as_samples(rows)))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(np.array_equal(results[0], r) for r in results)
    assert oracle.query_count == 64


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 12))
def test_label_range_under_fuzz(seed, n):
    rows = np.random.default_rng(seed).random((16, 5)).astype(np.float32)
    labels = mock_oracle(region_rule(n=n)).classify_batch(as_samples(rows))
    assert labels.min() >= 0
    assert labels.max() < n


# -- remote protocol --------------------------------------------------------------

class _StubHandler(BaseHTTPRequestHandler):
    num_classes = 3
    fail_first = 0
    bad_labels = False
    calls = []

    def log_message(self, *args):
        pass

    def do_GET(self):
        if self.path == "/v1/info":
            self._reply({"num_classes": self.num_classes})
        else:
            self.send_error(404)

    def do_POST(self):
        cls = type(self)
        cls.calls.append(self.path)
        if cls.fail_first > 0:
            cls.fail_first -= 1
            self.send_error(503)
            return
        if self.path != "/v1/classify":
            self.send_error(404)
            return
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        count = len(body["samples"])
        if cls.bad_labels:
            labels = [99] * count
        else:
            labels = [int(sum(s) * 10) % cls.num_classes for s in body["samples"]]
        self._reply({"labels": labels})

    def _reply(self, payload):
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def stub_server():
    handler = type("Handler", (_StubHandler,), {"calls": []})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", handler
    server.shutdown()


def test_remote_info(stub_server):
    url, _ = stub_server
    assert remote_oracle(url).info() == 3


def test_remote_classify_and_cache(stub_server):
    url, handler = stub_server
    oracle = remote_oracle(url)
    rows = np.random.default_rng(0).random((10, 4)).astype(np.float32)
    labels = oracle.classify_batch(as_samples(rows))
    assert labels.shape == (10,)
    again = oracle.classify_batch(as_samples(rows))
    assert np.array_equal(labels, again)
    assert oracle.query_count == 10
    assert len(handler.calls) == 1  # second pass fully cached


def test_remote_retry_then_success(stub_server):
    url, handler = stub_server
    handler.fail_first = 2
    oracle = remote_oracle(url)
    rows = np.random.default_rng(1).random((3, 4)).astype(np.float32)
    labels = oracle.classify_batch(as_samples(rows))
    assert labels.shape == (3,)


def test_remote_unreachable():
    oracle = remote_oracle("http://127.0.0.1:9")  # discard port, nothing listens
    with pytest.raises(OracleError, match="unreachable"):
        oracle.info()


def test_remote_label_out_of_range(stub_server):
    url, handler = stub_server
    handler.bad_labels = True
    oracle = remote_oracle(url)
    rows = np.random.default_rng(2).random((2, 4)).astype(np.float32)
    with pytest.raises(OracleError, match="protocol violation"):
        oracle.classify_batch(as_samples(rows))


# -- spec parsing -------------------------------------------------------------------

def test_parse_inline_mock_spec():
    oracle = parse_oracle_spec("mock:region-threshold,n=10,seed=1")
    assert oracle.info() == 10


def test_parse_mock_file_spec(tmp_path):
    rule_file = tmp_path / "rule.json"
    rule_file.write_text(region_rule(n=7).to_json())
    oracle = parse_oracle_spec(f"mock:{rule_file}")
    assert oracle.info() == 7


def test_parse_rejects_unknown():
    with pytest.raises(OracleError, match="unrecognized oracle spec"):
        parse_oracle_spec("ftp://nope")
    with pytest.raises(OracleError, match="needs n="):
        parse_oracle_spec("mock:region-threshold,seed=1")
