"""HTTP client for masked-LM conditionals served over the /v1 protocol.

Wire format:
  GET  /v1/info        -> {"model": str, "vocab_size": int, "mask_id": int,
                           "max_len": int}
  POST /v1/conditional    {"tokens": [ids], "positions": [ints]}
                       -> {"log_probs": [[floats | null]]}
Log-probabilities travel on the wire to avoid underflow; null encodes
log(0). The client exponentiates and normalizes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import requests

from .core import ConditionalModel, Vocabulary, validate_distribution
from .errors import ConfigurationError, ProtocolError, TransportError, UsageError

ENDPOINT_ENV_VAR = "GSNPROBE_ENDPOINT"


@dataclass(frozen=True)
class ModelInfo:
    model: str
    vocab_size: int
    mask_id: int
    max_len: int


@dataclass
class ModelEndpoint:
    base_url: str
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 0.25
    info: ModelInfo | None = field(default=None, compare=False)

    def url(self, path: str) -> str:
        return self.base_url.rstrip("/") + path


def _request_with_retries(endpoint: ModelEndpoint, method: str, path: str,
                          payload: dict | None = None) -> requests.Response:
    last_error = None
    attempts = max(1, endpoint.retries)
    for attempt in range(attempts):
        try:
            if method == "GET":
                resp = requests.get(endpoint.url(path), timeout=endpoint.timeout)
            else:
                resp = requests.post(endpoint.url(path), json=payload,
                                     timeout=endpoint.timeout)
            return resp
        except requests.RequestException as exc:
            last_error = exc
            if attempt + 1 < attempts:
                time.sleep(endpoint.backoff * (2 ** attempt))
    raise TransportError(
        f"{method} {endpoint.url(path)} failed after {attempts} attempts: {last_error}",
        attempts=attempts,
    )


def fetch_info(endpoint: ModelEndpoint) -> ModelInfo:
    """Fetch and cache /v1/info; raises TransportError after the retry budget."""
    resp = _request_with_retries(endpoint, "GET", "/v1/info")
    if resp.status_code != 200:
        raise ProtocolError(f"/v1/info returned HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        doc = resp.json()
        info = ModelInfo(model=str(doc["model"]), vocab_size=int(doc["vocab_size"]),
                         mask_id=int(doc["mask_id"]), max_len=int(doc["max_len"]))
    except (ValueError, KeyError, TypeError) as exc:
        raise ProtocolError(f"malformed /v1/info payload: {exc}") from exc
    endpoint.info = info
    return info


def _normalize_log_probs(row, size: int) -> np.ndarray:
    lp = np.array([-math.inf if v is None else float(v) for v in row])
    if lp.shape[0] != size:
        raise ProtocolError(f"expected {size} log-probs, got {lp.shape[0]}")
    if np.isnan(lp).any() or (lp == math.inf).any():
        raise ProtocolError("log-prob payload contains NaN or +inf")
    peak = lp.max()
    if peak == -math.inf:
        raise ProtocolError("log-prob payload is -inf everywhere")
    p = np.exp(lp - peak)
    p /= p.sum()
    reason = validate_distribution(p, size=size, tol=1e-6)
    if reason is not None:
        raise ProtocolError(f"normalized payload invalid: {reason}")
    return p


def query_conditionals(endpoint: ModelEndpoint, token_ids: Sequence[int],
                       positions: Sequence[int]) -> list[np.ndarray]:
    """One normalized probability vector per requested position."""
    if endpoint.info is None:
        fetch_info(endpoint)
    positions = [int(p) for p in positions]
    for pos in positions:
        if not 0 <= pos < len(token_ids):
            raise UsageError(f"position {pos} outside sequence of length {len(token_ids)}")
    if not positions:
        return []
    payload = {"tokens": [int(t) for t in token_ids], "positions": positions}
    resp = _request_with_retries(endpoint, "POST", "/v1/conditional", payload)
    if resp.status_code != 200:
        failed = ()
        try:
            failed = tuple(resp.json().get("positions", ()))
        except ValueError:
            pass
        raise ProtocolError(
            f"/v1/conditional returned HTTP {resp.status_code}: {resp.text[:200]}",
            failed_positions=failed,
        )
    try:
        rows = resp.json()["log_probs"]
    except (ValueError, KeyError) as exc:
        raise ProtocolError(f"malformed /v1/conditional payload: {exc}") from exc
    if not isinstance(rows, list) or len(rows) != len(positions):
        raise ProtocolError(
            f"expected {len(positions)} log-prob rows, got {len(rows) if isinstance(rows, list) else type(rows)}")
    return [_normalize_log_probs(row, endpoint.info.vocab_size) for row in rows]


class RemoteConditionalModel(ConditionalModel):
    """ConditionalModel over a remote endpoint, validated against the local
    vocabulary file at construction (sizes and mask id must match)."""

    def __init__(self, endpoint: ModelEndpoint, vocab: Vocabulary, length: int):
        info = endpoint.info or fetch_info(endpoint)
        if info.vocab_size != vocab.size:
            raise ConfigurationError(
                f"server vocab size {info.vocab_size} != local vocabulary size {vocab.size}")
        if info.mask_id != vocab.mask_id:
            raise ConfigurationError(
                f"server mask id {info.mask_id} != local mask id {vocab.mask_id}")
        if length > info.max_len:
            raise ConfigurationError(
                f"requested length {length} exceeds server max_len {info.max_len}")
        self.endpoint = endpoint
        self.vocab = vocab
        self.length = length

    def query(self, ids, site: int) -> np.ndarray:
        self._check_site(ids, site)
        return query_conditionals(self.endpoint, list(ids), [site])[0]

    def fingerprint(self) -> str:
        info = self.endpoint.info
        return f"remote:{info.model}" if info else "remote:unknown"
