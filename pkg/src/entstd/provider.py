"""Remote embedding-provider client with an on-disk cache.

The provider speaks a minimal HTTP protocol: POST {"input": [text, ...]}
returns {"data": [{"embedding": [...]}, ...]} in input order, with an
optional bearer token. Responses are quantized to float32 when cached,
and cached values are always served back, so a text embeds identically on
cold and warm paths.

The cache file is an append-only record log: a 16-byte magic/version
header followed by (key hash: u64, dim: u32, values: dim little-endian
float32) records. Keys hash (endpoint, text), so one cache file can serve
several providers. An incomplete trailing record (interrupted append) is
ignored on load.
"""

from __future__ import annotations

import json
import struct
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .binio import MAGIC_CACHE, pack_header
from .errors import DataError, ProviderError

_RECORD_HEAD = struct.Struct("<QI")


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str
    auth_token: str = ""
    batch_limit: int = 64
    cache_path: str | Path = "provider-cache.bin"
    max_retries: int = 3
    backoff_seconds: float = 0.5
    timeout_seconds: float = 30.0

    def __post_init__(self):
        if self.batch_limit < 1:
            raise ValueError("batch_limit must be >= 1")


def cache_key(endpoint: str, text: str) -> int:
    import hashlib

    raw = endpoint.encode("utf-8") + b"\x00" + text.encode("utf-8")
    return int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "little")


class EmbeddingCache:
    """Append-only float32 embedding log, keyed by 64-bit hashes."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[int, np.ndarray] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        data = self.path.read_bytes()
        if len(data) < 16 or data[:12] != MAGIC_CACHE:
            raise DataError(f"not an embedding cache file: {self.path}")
        pos = 16
        while pos + _RECORD_HEAD.size <= len(data):
            key, dim = _RECORD_HEAD.unpack_from(data, pos)
            end = pos + _RECORD_HEAD.size + 4 * dim
            if end > len(data):
                break  # interrupted append; ignore the partial tail
            values = np.frombuffer(data[pos + _RECORD_HEAD.size : end], dtype="<f4").copy()
            self._entries[key] = values
            pos = end

    def get(self, key: int) -> np.ndarray | None:
        with self._lock:
            return self._entries.get(key)

    def __len__(self) -> int:
        return len(self._entries)

    def put(self, key: int, values: np.ndarray) -> None:
        arr = np.asarray(values, dtype="<f4")
        with self._lock:
            if key in self._entries:
                return
            new_file = not self.path.exists()
            with open(self.path, "ab") as fh:
                if new_file:
                    fh.write(pack_header(MAGIC_CACHE))
                fh.write(_RECORD_HEAD.pack(key, arr.size))
                fh.write(arr.tobytes())
            self._entries[key] = arr


def _post_embeddings(cfg: ProviderConfig, batch: list[str]) -> list[np.ndarray]:
    body = json.dumps({"input": batch}).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    if cfg.auth_token:
        headers["Authorization"] = f"Bearer {cfg.auth_token}"
    request = urllib.request.Request(cfg.endpoint, data=body, headers=headers)
    last_error: Exception | None = None
    for attempt in range(cfg.max_retries):
        try:
            with urllib.request.urlopen(request, timeout=cfg.timeout_seconds) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
            break
        except urllib.error.HTTPError as exc:
            if 400 <= exc.code < 500:
                raise ProviderError(f"provider rejected request: HTTP {exc.code}") from exc
            last_error = exc
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            last_error = exc
        if attempt + 1 < cfg.max_retries:
            time.sleep(cfg.backoff_seconds * (2**attempt))
    else:
        raise ProviderError(f"provider unreachable after {cfg.max_retries} attempts: {last_error}")
    if "error" in payload:
        raise ProviderError(f"provider error payload: {payload['error']}")
    data = payload.get("data")
    if not isinstance(data, list) or len(data) != len(batch):
        raise ProviderError(
            f"provider returned {len(data) if isinstance(data, list) else 'no'} "
            f"embeddings for {len(batch)} inputs"
        )
    return [np.asarray(item["embedding"], dtype=np.float64) for item in data]


def fetch_embeddings(cfg: ProviderConfig, texts: list[str]) -> np.ndarray:
    """Embeddings for texts in order, consulting the cache before the network.

    Uncached texts are fetched in batches of at most ``batch_limit``;
    vectors are float32-quantized into the cache and served from there, so
    repeated calls return identical values. Raises ProviderError on network
    exhaustion, error payloads, or inconsistent dimensions.
    """
    if not texts:
        return np.zeros((0, 0))
    cache = EmbeddingCache(cfg.cache_path)
    keys = [cache_key(cfg.endpoint, t) for t in texts]
    missing: list[tuple[int, str]] = []
    seen = set()
    for key, text in zip(keys, texts):
        if cache.get(key) is None and key not in seen:
            seen.add(key)
            missing.append((key, text))
    for start in range(0, len(missing), cfg.batch_limit):
        chunk = missing[start : start + cfg.batch_limit]
        vectors = _post_embeddings(cfg, [text for _, text in chunk])
        for (key, _), vec in zip(chunk, vectors):
            cache.put(key, vec)
    rows = [cache.get(key) for key in keys]
    dims = {row.size for row in rows}
    if len(dims) != 1:
        raise ProviderError(f"inconsistent embedding dimensions in batch: {sorted(dims)}")
    return np.stack([row.astype(np.float64) for row in rows])
