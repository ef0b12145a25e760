import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from gsnprobe.chains import ChainConfig, run_chain
from gsnprobe.core import Vocabulary
from gsnprobe.errors import (ConfigurationError, ProtocolError, TransportError,
                             UsageError)
from gsnprobe.remote import (ModelEndpoint, RemoteConditionalModel, fetch_info,
                             query_conditionals)
from gsnprobe.stubserver import StubModelServer
from gsnprobe.tabular import ExactJoint, TabularModel, derive_conditionals


@pytest.fixture(scope="module")
def served():
    joint = ExactJoint.random_dirichlet(2, 2, 3)
    model = TabularModel(derive_conditionals(joint))
    with StubModelServer(model) as server:
        yield model, server


class TestFetchInfo:
    def test_healthy_server(self, served):
        model, server = served
        info = fetch_info(ModelEndpoint(server.url, timeout=5))
        assert info.vocab_size == model.vocab.size
        assert info.mask_id == model.vocab.mask_id
        assert info.max_len == model.length

    def test_unreachable_port_exhausts_retries(self):
        endpoint = ModelEndpoint("http://127.0.0.1:9", timeout=0.2, retries=2,
                                 backoff=0.01)
        with pytest.raises(TransportError) as err:
            fetch_info(endpoint)
        assert err.value.attempts == 2

    def test_vocab_size_mismatch_names_both(self, served):
        _, server = served
        endpoint = ModelEndpoint(server.url, timeout=5)
        wrong = Vocabulary(tokens=("a", "b", "c", "[MASK]"), mask_id=3, unk_id=3)
        with pytest.raises(ConfigurationError) as err:
            RemoteConditionalModel(endpoint, wrong, 2)
        assert "4" in str(err.value) and "3" in str(err.value)

    def test_mask_id_mismatch(self, served):
        model, server = served
        endpoint = ModelEndpoint(server.url, timeout=5)
        wrong = Vocabulary(tokens=("[MASK]", "a", "b"), mask_id=0, unk_id=0)
        with pytest.raises(ConfigurationError):
            RemoteConditionalModel(endpoint, wrong, 2)

    def test_length_beyond_max(self, served):
        model, server = served
        with pytest.raises(ConfigurationError):
            RemoteConditionalModel(ModelEndpoint(server.url, timeout=5), model.vocab, 99)


class TestQueryConditionals:
    def test_empty_positions(self, served):
        _, server = served
        assert query_conditionals(ModelEndpoint(server.url, timeout=5), [0, 1], []) == []

    def test_vectors_normalized(self, served):
        _, server = served
        rows = query_conditionals(ModelEndpoint(server.url, timeout=5), [0, 1], [0, 1])
        for p in rows:
            assert abs(p.sum() - 1.0) <= 1e-6
            assert (p >= 0).all()

    def test_end_to_end_matches_table(self, served):
        model, server = served
        endpoint = ModelEndpoint(server.url, timeout=5)
        for ids in [(0, 0), (0, 1), (1, 0), (1, 1)]:
            for site in (0, 1):
                remote = query_conditionals(endpoint, list(ids), [site])[0]
                local = model.query(ids, site)
                assert np.abs(remote - local).max() <= 1e-9

    def test_batch_equals_concatenated_singles(self, served):
        _, server = served
        endpoint = ModelEndpoint(server.url, timeout=5)
        batched = query_conditionals(endpoint, [0, 1], [0, 1, 0])
        singles = [query_conditionals(endpoint, [0, 1], [k])[0] for k in (0, 1, 0)]
        for a, b in zip(batched, singles):
            np.testing.assert_array_equal(a, b)

    def test_out_of_range_position_rejected_client_side(self, served):
        _, server = served
        with pytest.raises(UsageError):
            query_conditionals(ModelEndpoint(server.url, timeout=5), [0, 1], [5])

    def test_server_rejection_names_positions(self, served):
        # the stub enforces positions server-side with a 400 naming them
        import requests
        _, server = served
        resp = requests.post(server.url + "/v1/conditional",
                             json={"tokens": [0, 1], "positions": [7]}, timeout=5)
        assert resp.status_code == 400
        assert resp.json()["positions"] == [7]


class _GarbageHandler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):
        pass

    def do_GET(self):
        body = b"{\"model\": \"x\"}"  # missing fields
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        body = b"not json"
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class _PartialFailureHandler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):
        pass

    def do_POST(self):
        body = json.dumps({"error": "position failed", "positions": [1]}).encode()
        self.send_response(400)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class TestMalformedPayloads:
    @pytest.fixture()
    def garbage_url(self):
        server = ThreadingHTTPServer(("127.0.0.1", 0), _GarbageHandler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        host, port = server.server_address[:2]
        yield f"http://{host}:{port}"
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)

    def test_malformed_info(self, garbage_url):
        with pytest.raises(ProtocolError):
            fetch_info(ModelEndpoint(garbage_url, timeout=5))

    def test_malformed_conditional(self, garbage_url):
        endpoint = ModelEndpoint(garbage_url, timeout=5)
        endpoint.info = type("I", (), {"model": "x", "vocab_size": 3, "mask_id": 2,
                                       "max_len": 2})()
        with pytest.raises(ProtocolError):
            query_conditionals(endpoint, [0, 1], [0])

    def test_partial_failure_names_positions(self):
        server = ThreadingHTTPServer(("127.0.0.1", 0), _PartialFailureHandler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        host, port = server.server_address[:2]
        try:
            endpoint = ModelEndpoint(f"http://{host}:{port}", timeout=5)
            endpoint.info = type("I", (), {"model": "x", "vocab_size": 3,
                                           "mask_id": 2, "max_len": 2})()
            with pytest.raises(ProtocolError) as err:
                query_conditionals(endpoint, [0, 1], [0, 1])
            assert err.value.failed_positions == (1,)
        finally:
            server.shutdown()
            server.server_close()
            thread.join(timeout=5)


class TestTransportTransparency:
    def test_chain_identical_local_vs_stub(self, served):
        model, server = served
        endpoint = ModelEndpoint(server.url, timeout=5)
        remote_model = RemoteConditionalModel(endpoint, model.vocab, model.length)
        cfg = ChainConfig(epochs=400, burn_in=50, lag=25, epsilon=0.01, seed=11)
        local_records = list(run_chain(model, cfg))
        remote_records = list(run_chain(remote_model, cfg))
        assert len(local_records) == len(remote_records) > 0
        for a, b in zip(local_records, remote_records):
            assert a.tokens == b.tokens
            assert a.text == b.text
            assert a.edits == b.edits
            if np.isfinite(a.energy) or np.isfinite(b.energy):
                assert a.energy == pytest.approx(b.energy, abs=1e-9)
