"""Acceptance: the stub adapter, driven by the primary client over its real
transports, is indistinguishable from the in-process mock rules."""

import json
import subprocess
import sys
import threading
from contextlib import contextmanager

from metric_ga.scorer_bridge import (ScoreItem, ScorerClient, ScorerEndpoint,
                                     make_mock_scorer)
from scorer_adapter.service import StubScorer, make_http_server


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


def _adapter_endpoint(rule: str) -> ScorerEndpoint:
    return ScorerEndpoint(
        kind="subprocess",
        address=f"{sys.executable} -m scorer_adapter --model stub:{rule}")


def _batch(n, with_refs=True):
    items = []
    for i in range(n):
        refs = (f"reference text number {i}",) if with_refs else None
        items.append(ScoreItem(id=f"item-{i}", src=f"source {i}",
                               mt=f"candidate translation {i} with {i % 7} extra",
                               refs=refs))
    return items


def test_protocol_round_trip_matches_in_process_mock():
    with criterion("subprocess adapter == in-process mock on a 50-item batch, exactly"):
        items = _batch(50)
        mock_scores = ScorerClient(make_mock_scorer("neg-edit-distance"),
                                   use_cache=False).score_batch(items)
        client = ScorerClient(_adapter_endpoint("neg-edit-distance"),
                              timeout_ms=30_000, use_cache=False)
        try:
            adapter_scores = client.score_batch(items)
        finally:
            client.close()
        assert adapter_scores == mock_scores  # ids and doubles, bit-exact


def test_reference_free_stub_matches_mock():
    with criterion("reference-free stub (len-bias) == in-process mock"):
        items = _batch(20, with_refs=False)
        mock_scores = ScorerClient(make_mock_scorer("len-bias"),
                                   use_cache=False).score_batch(items)
        client = ScorerClient(_adapter_endpoint("len-bias"),
                              timeout_ms=30_000, use_cache=False)
        try:
            assert client.score_batch(items) == mock_scores
        finally:
            client.close()


def test_malformed_request_yields_error_without_exit():
    with criterion("malformed request -> error object, process keeps serving"):
        proc = subprocess.Popen(
            [sys.executable, "-m", "scorer_adapter", "--model", "stub:len-bias"],
            stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1)
        try:
            proc.stdin.write("this is not json\n")
            proc.stdin.flush()
            response = json.loads(proc.stdout.readline())
            assert set(response) == {"batch_id", "error"}
            assert proc.poll() is None  # still alive

            request = {"batch_id": "after-error",
                       "items": [{"id": "a", "src": "s", "mt": "x y z"}]}
            proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
            response = json.loads(proc.stdout.readline())
            assert response["batch_id"] == "after-error"
            assert response["scores"] == [{"id": "a", "score": 0.03}]
        finally:
            proc.stdin.close()
            proc.wait(timeout=10)


def test_http_transport_round_trip():
    with criterion("HTTP POST /score serves the same responses"):
        server = make_http_server(StubScorer("neg-edit-distance"), 0)
        port = server.server_address[1]
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            endpoint = ScorerEndpoint(kind="http", address=f"http://127.0.0.1:{port}")
            client = ScorerClient(endpoint, timeout_ms=10_000, use_cache=False)
            items = _batch(10)
            mock_scores = ScorerClient(make_mock_scorer("neg-edit-distance"),
                                       use_cache=False).score_batch(items)
            assert client.score_batch(items) == mock_scores
        finally:
            server.shutdown()
            server.server_close()
            thread.join(timeout=5)


def test_model_load_failure_exits_nonzero_before_responding():
    with criterion("unloadable model -> non-zero exit before first response"):
        proc = subprocess.run(
            [sys.executable, "-m", "scorer_adapter", "--model", "stub:bogus-rule"],
            input="", capture_output=True, text=True, timeout=30)
        assert proc.returncode == 1
        assert proc.stdout == ""
        assert "bogus-rule" in proc.stderr

        proc = subprocess.run(
            [sys.executable, "-m", "scorer_adapter", "--model", "not-a-known-family"],
            input="", capture_output=True, text=True, timeout=30)
        assert proc.returncode == 1
        assert proc.stdout == ""
