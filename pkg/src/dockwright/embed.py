"""Token sequences to unit vectors.

Two embedders behind one call: a deterministic hashed n-gram baseline
(character 3-5-grams plus word unigrams, 64-bit FNV-1a feature hashing,
signed log-scaled term frequencies, L2 norm) and a client for a remote
sentence-embedding service speaking POST /embed.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
import requests

from .config import ENV_EMBEDDER_URL
from .errors import ValidationError

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

DEFAULT_DIM = 256


class RemoteEmbedderError(RuntimeError):
    """Transport-level failure talking to the embedding service; retriable."""


class RemoteProtocolError(RuntimeError):
    """The service answered, but not in the agreed shape; fatal."""


@dataclass(frozen=True)
class EmbedderConfig:
    kind: str = "hashed-ngram"  # or "remote"
    dim: int = DEFAULT_DIM
    ngram_min: int = 3
    ngram_max: int = 5
    include_word_unigrams: bool = True
    remote_url: str | None = None
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind not in ("hashed-ngram", "remote"):
            raise ValidationError(f"unknown embedder kind {self.kind!r}")
        if self.dim < 1:
            raise ValidationError("dim must be positive")
        if self.ngram_min > self.ngram_max or self.ngram_min < 1:
            raise ValidationError("need 1 <= ngram_min <= ngram_max")
        if self.kind == "remote" and not self.remote_url:
            raise ValidationError(
                f"remote embedder needs remote_url (or {ENV_EMBEDDER_URL})"
            )


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & _MASK64
    return h


def _token_list(tokens) -> list[str]:
    return list(getattr(tokens, "tokens", tokens))


def _embed_hashed(tokens: list[str], cfg: EmbedderConfig) -> np.ndarray:
    joined = " ".join(tokens)
    features: Counter[str] = Counter()
    for n in range(cfg.ngram_min, cfg.ngram_max + 1):
        if len(joined) >= n:
            features.update(joined[i:i + n] for i in range(len(joined) - n + 1))
    if cfg.include_word_unigrams:
        features.update(tokens)
    vec = np.zeros(cfg.dim, dtype=np.float64)
    for feature, tf in features.items():
        h = fnv1a64(feature.encode("utf-8", "surrogateescape"))
        sign = 1.0 if (h >> 63) == 0 else -1.0
        vec[h % cfg.dim] += sign * math.log(1.0 + tf)
    return _unit(vec)


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.sqrt((vec * vec).sum()))
    if norm == 0.0:
        return vec
    return vec / norm


def embed(tokens, cfg: EmbedderConfig | None = None) -> np.ndarray:
    """Embed one token sequence as a unit vector (zero vector for empty
    input). Deterministic for the hashed kind."""
    cfg = cfg or EmbedderConfig()
    toks = _token_list(tokens)
    if cfg.kind == "hashed-ngram":
        return _embed_hashed(toks, cfg)
    return embed_batch([toks], cfg)[0]


def embed_batch(token_seqs, cfg: EmbedderConfig | None = None) -> np.ndarray:
    """Embed many sequences; one POST round trip for the remote kind."""
    cfg = cfg or EmbedderConfig()
    seqs = [_token_list(t) for t in token_seqs]
    if cfg.kind == "hashed-ngram":
        if not seqs:
            return np.zeros((0, cfg.dim), dtype=np.float64)
        return np.stack([_embed_hashed(t, cfg) for t in seqs])
    texts = [" ".join(t) for t in seqs]
    if not texts:
        return np.zeros((0, cfg.dim), dtype=np.float64)
    url = cfg.remote_url.rstrip("/") + "/embed"
    try:
        resp = requests.post(url, json={"texts": texts}, timeout=cfg.timeout)
    except requests.RequestException as exc:
        raise RemoteEmbedderError(f"embedding service unreachable: {exc}") from exc
    if resp.status_code != 200:
        raise RemoteEmbedderError(
            f"embedding service returned status {resp.status_code}"
        )
    try:
        vectors = resp.json()["vectors"]
    except (ValueError, KeyError) as exc:
        raise RemoteProtocolError(f"malformed embedding response: {exc}") from exc
    if not isinstance(vectors, list) or len(vectors) != len(texts):
        raise RemoteProtocolError(
            f"asked for {len(texts)} vectors, got "
            f"{len(vectors) if isinstance(vectors, list) else type(vectors).__name__}"
        )
    out = np.zeros((len(texts), cfg.dim), dtype=np.float64)
    for i, row in enumerate(vectors):
        if not isinstance(row, list) or len(row) != cfg.dim:
            raise RemoteProtocolError(
                f"vector {i} is not a list of dimension {cfg.dim}"
            )
        try:
            out[i] = _unit(np.asarray(row, dtype=np.float64))
        except (TypeError, ValueError) as exc:
            raise RemoteProtocolError(f"vector {i} is not numeric: {exc}") from exc
    return out


def distance(a, b) -> float:
    """Euclidean distance; monotone in (1 - cosine) on unit vectors."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValidationError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    return float(np.sqrt(((va - vb) ** 2).sum()))
