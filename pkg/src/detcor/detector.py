"""Per-token four-class error detector.

A linear softmax classifier over a pluggable token representation. The
default representation is a hashed sparse map of local character context
and background n-gram frequencies; anything exposing ``dim`` and
``indices(sentence, i)`` can stand in for it.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Iterable, List, Mapping, Optional, Protocol, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .core import BOS, EOS, PathLike, SentencePair, Tag, tags_from_labels

DETECTOR_KIND = "detector.v1"
N_CLASSES = 4
END = "\x04"  # sentinel current character at the end slot


class ModelContractError(ValueError):
    pass


class Representation(Protocol):
    dim: int

    def indices(self, sentence: str, i: int) -> List[int]: ...


@lru_cache(maxsize=1 << 20)
def _hash(feature: str, dim: int) -> int:
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dim


def _bucket(count: int) -> int:
    return min(int(math.log2(1 + count)), 20)


@dataclass
class Featurizer:
    """Hashed local-context features for position ``i`` (``i == n`` is the end slot)."""

    dim: int = 1 << 18
    unigrams: Mapping[str, int] = field(default_factory=dict)
    bigrams: Mapping[str, int] = field(default_factory=dict)
    confusable: frozenset = frozenset()
    trigrams: Mapping[str, int] = field(default_factory=dict)

    @classmethod
    def from_corpus(cls, clean: Iterable[str], dim: int = 1 << 18, confusable=()) -> "Featurizer":
        uni, bi, tri = Counter(), Counter(), Counter()
        for s in clean:
            uni.update(s)
            padded = BOS + s + EOS
            bi.update(padded[j : j + 2] for j in range(len(padded) - 1))
            padded = BOS + padded + EOS
            tri.update(padded[j : j + 3] for j in range(len(padded) - 2))
        return cls(dim, dict(uni), dict(bi), frozenset(confusable), dict(tri))

    def features(self, s: str, i: int) -> List[str]:
        n = len(s)
        if not 0 <= i <= n:
            raise IndexError(f"position {i} outside 0..{n}")
        c = s[i] if i < n else END
        p = s[i - 1] if i > 0 else BOS
        pp = s[i - 2] if i > 1 else BOS
        q = s[i + 1] if i + 1 < n else EOS
        qq = s[i + 2] if i + 2 < n else EOS
        uni, bi, tri = self.unigrams, self.bigrams, self.trigrams
        f_c = _bucket(uni.get(c, 0))
        f_pc = _bucket(bi.get(p + c, 0))
        f_cq = _bucket(bi.get(c + q, 0))
        f_pq = _bucket(bi.get(p + q, 0))
        feats = [
            "c=" + c, "p=" + p, "n=" + q,
            "pc=" + p + c, "cn=" + c + q, "pcn=" + p + c + q, "ppc=" + pp + p + c,
            f"fc={f_c}", f"fpc={f_pc}", f"fcn={f_cq}", f"fpn={f_pq}",
            f"fpc,fcn={f_pc},{f_cq}", f"fpc,fpn={f_pc},{f_pq}",
            f"fpc,fcn,fpn={f_pc},{f_cq},{f_pq}",
        ]
        if tri:
            # trigram evidence with and without the current character
            t_with = (_bucket(tri.get(pp + p + c, 0)), _bucket(tri.get(p + c + q, 0)))
            t_without = (_bucket(tri.get(pp + p + q, 0)), _bucket(tri.get(p + q + qq, 0)))
            feats += [
                "t3={},{}".format(*t_with),
                "t3skip={},{}".format(*t_without),
                "t3all={},{},{},{}".format(*t_with, *t_without),
            ]
        if p == c:
            feats.append("rep-prev")
        if c == q:
            feats.append("rep-next")
        if c in self.confusable:
            feats.append("conf")
        if i == 0:
            feats.append("begin")
        if i == n - 1:
            feats.append("last")
        if i == n:
            feats.append("end")
        return feats

    def indices(self, s: str, i: int) -> List[int]:
        return [_hash(f, self.dim) for f in self.features(s, i)]

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "unigrams": dict(sorted(self.unigrams.items())),
            "bigrams": dict(sorted(self.bigrams.items())),
            "confusable": "".join(sorted(self.confusable)),
            "trigrams": dict(sorted(self.trigrams.items())),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Featurizer":
        return cls(
            int(obj["dim"]), obj["unigrams"], obj["bigrams"],
            frozenset(obj["confusable"]), obj.get("trigrams", {}),
        )


def featurize(featurizer: Representation, sentence: str, i: int) -> np.ndarray:
    return np.asarray(featurizer.indices(sentence, i), dtype=np.int64)


def feature_matrix(featurizer: Representation, sentences: Sequence[str]) -> sp.csr_matrix:
    """Stack every position (n + 1 per sentence) into one CSR matrix."""
    indptr = [0]
    indices: List[int] = []
    for s in sentences:
        for i in range(len(s) + 1):
            indices.extend(featurizer.indices(s, i))
            indptr.append(len(indices))
    X = sp.csr_matrix(
        (np.ones(len(indices)), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(indptr) - 1, featurizer.dim),
    )
    X.sum_duplicates()
    return X


@dataclass
class DetectorHyper:
    dim: int = 1 << 18
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    l2: float = 0.0
    epochs: int = 5
    batch_size: int = 32
    seed: int = 0


@dataclass(eq=False)
class DetectorModel:
    weights: np.ndarray  # (4, dim)
    bias: np.ndarray  # (4,)
    featurizer: Representation
    hyper: DetectorHyper = field(default_factory=DetectorHyper)
    history: List[float] = field(default_factory=list, compare=False)

    @classmethod
    def zeros(cls, featurizer: Representation, hyper: Optional[DetectorHyper] = None):
        hyper = hyper or DetectorHyper(dim=featurizer.dim)
        return cls(np.zeros((N_CLASSES, featurizer.dim)), np.zeros(N_CLASSES), featurizer, hyper)

    def check(self) -> None:
        if self.weights.shape != (N_CLASSES, self.featurizer.dim):
            raise ModelContractError(
                f"weights {self.weights.shape} do not match feature dimension {self.featurizer.dim}"
            )

    def logits(self, X: sp.csr_matrix) -> np.ndarray:
        self.check()
        return X @ self.weights.T + self.bias

    def to_json(self) -> dict:
        if not isinstance(self.featurizer, Featurizer):
            raise TypeError("only the hashed featurizer can be serialized")
        cols = np.flatnonzero(np.any(self.weights != 0, axis=0))
        return {
            "kind": DETECTOR_KIND,
            "d": self.featurizer.dim,
            # sparse columns: [feature index, w_keep, w_mistaken, w_missing, w_redundant]
            "weights": [[int(j)] + self.weights[:, j].tolist() for j in cols],
            "bias": self.bias.tolist(),
            "hyper": asdict(self.hyper),
            "features": self.featurizer.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DetectorModel":
        if obj.get("kind") != DETECTOR_KIND:
            raise ModelContractError(
                f"expected kind {DETECTOR_KIND!r}, got {obj.get('kind')!r}"
            )
        feat = Featurizer.from_json(obj["features"])
        d = int(obj["d"])
        if feat.dim != d:
            raise ModelContractError("feature dimension disagrees with model dimension")
        W = np.zeros((N_CLASSES, d))
        for row in obj["weights"]:
            W[:, int(row[0])] = row[1:]
        return cls(W, np.asarray(obj["bias"], dtype=float), feat, DetectorHyper(**obj["hyper"]))

    def save(self, path: PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json(), fh, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path: PathLike) -> "DetectorModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def predict(model: DetectorModel, sentence: str) -> np.ndarray:
    """Class distributions for every position, shape (n + 1, 4)."""
    return softmax(model.logits(feature_matrix(model.featurizer, [sentence])))


def tag(model: DetectorModel, sentence: str, bias: Optional[Sequence[float]] = None) -> Tuple[Tag, ...]:
    """Argmax class per position; ``bias`` is added to the logits first."""
    z = model.logits(feature_matrix(model.featurizer, [sentence]))
    if bias is not None:
        z = z + np.asarray(bias, dtype=float)
    return tuple(Tag(int(k)) for k in np.argmax(z, axis=1))


def gold_tags(pair: SentencePair) -> Tuple[Tag, ...]:
    if pair.gold_labels is None:
        raise ValueError("pair has no gold labels")
    return tags_from_labels(pair.gold_labels)


def _loss_grad(W, b, X, y, l2):
    z = X @ W.T + b
    logp = log_softmax(z)
    N = X.shape[0]
    loss = -logp[np.arange(N), y].mean() + 0.5 * l2 * float(np.sum(W * W))
    G = np.exp(logp)
    G[np.arange(N), y] -= 1.0
    G /= N
    dW = np.asarray((X.T @ G).T) + l2 * W
    db = G.sum(axis=0)
    return float(loss), dW, db


def loss_and_gradient(model: DetectorModel, batch: Sequence[Tuple[str, Sequence[Tag]]]):
    """Mean negative log-likelihood of the gold class over all positions.

    Returns ``(loss, (dW, db))``. The L2 term ``l2/2 * |W|^2`` applies to
    the weights only.
    """
    sentences = [s for s, _ in batch]
    y = np.concatenate([np.asarray(t, dtype=np.int64) for _, t in batch])
    X = feature_matrix(model.featurizer, sentences)
    if X.shape[0] != len(y):
        raise ModelContractError("each sentence needs n + 1 gold tags")
    model.check()
    loss, dW, db = _loss_grad(model.weights, model.bias, X, y, model.hyper.l2)
    return loss, (dW, db)


class Adam:
    def __init__(self, shapes, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def train(
    corpus: Sequence[SentencePair],
    hyper: Optional[DetectorHyper] = None,
    featurizer: Optional[Representation] = None,
    log=None,
) -> DetectorModel:
    """Fit the detector with Adam on mini-batches of sentences.

    Without an explicit ``featurizer`` one is built from the targets'
    character statistics. Loss on the whole corpus is recorded before
    training and after each epoch in ``model.history``.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("cannot train a detector on an empty corpus")
    hyper = hyper or DetectorHyper()
    if featurizer is None:
        featurizer = Featurizer.from_corpus((p.target for p in corpus), dim=hyper.dim)
    model = DetectorModel.zeros(featurizer, hyper)

    X = feature_matrix(featurizer, [p.source for p in corpus])
    y = np.concatenate([np.asarray(gold_tags(p), dtype=np.int64) for p in corpus])
    bounds = np.cumsum([0] + [len(p.source) + 1 for p in corpus])
    rows = [np.arange(bounds[k], bounds[k + 1]) for k in range(len(corpus))]

    def full_loss():
        return _loss_grad(model.weights, model.bias, X, y, hyper.l2)[0]

    opt = Adam([model.weights.shape, model.bias.shape], hyper.lr, hyper.beta1, hyper.beta2, hyper.eps)
    rng = np.random.default_rng(hyper.seed)
    model.history.append(full_loss())
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(corpus))
        for start in range(0, len(order), hyper.batch_size):
            idx = np.concatenate([rows[k] for k in order[start : start + hyper.batch_size]])
            _, dW, db = _loss_grad(model.weights, model.bias, X[idx], y[idx], hyper.l2)
            opt.step([model.weights, model.bias], [dW, db])
        model.history.append(full_loss())
        if log is not None:
            log(f"epoch {epoch + 1}/{hyper.epochs}: loss {model.history[-1]:.4f}")
    if not np.all(np.isfinite(model.weights)):
        raise FloatingPointError("detector weights diverged")
    return model
