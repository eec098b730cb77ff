"""Pointer-style additive attention with independent per-position outputs.

Two instances of the same scorer are trained side by side: one scores "j is
the head of i" (heads orientation), the other "j is a dependent of i"
(dependents orientation).  Scores are pre-activation values; the logistic
(or optional tanh) output activation is applied downstream, after optional
merging of the two matrices.

The batched scorer and the single-pair scorer run through one shared
einsum kernel.  np.einsum evaluates a fixed contraction order regardless
of operand row count, so a row of the batched matrix is bit-identical to
the corresponding pairwise call; the BLAS matrix product does not give
that guarantee.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .conll import Sentence
from .encoder import glorot, glorot_vector

__all__ = [
    "HEADS",
    "DEPENDENTS",
    "PTR_HIDDEN",
    "PointerParams",
    "ScoreMatrix",
    "attention_score",
    "score_all",
    "target_matrix",
    "init_pointer_params",
]

HEADS = "heads"
DEPENDENTS = "dependents"
PTR_HIDDEN = 100


@dataclass
class PointerParams:
    """One attention scorer: v . tanh(W [key; query] + b)."""

    w: Tensor  # [hidden x 2*context]
    b: Tensor  # [hidden]
    v: Tensor  # [hidden]
    orientation: str = HEADS
    activation: str = "sigmoid"  # output activation: "sigmoid" or "tanh"

    @property
    def hidden(self) -> int:
        return self.w.data.shape[0]

    @property
    def context_dim(self) -> int:
        return self.w.data.shape[1] // 2


@dataclass
class ScoreMatrix:
    """n x n pre-activation scores; entry (i, j) reads per orientation:
    heads: "j is the head of i"; dependents: "j is a dependent of i"."""

    scores: Tensor
    orientation: str

    @property
    def n(self) -> int:
        return self.scores.data.shape[0]

    @property
    def data(self) -> np.ndarray:
        return self.scores.data


def _attention_kernel(cq: Tensor, ck: Tensor, params: PointerParams) -> Tensor:
    """Scores for every (query row of cq, key row of ck) pair.

    Forward einsums keep each output entry's arithmetic independent of the
    batch size; the backward pass is free to use BLAS.
    """
    d = params.context_dim
    if cq.data.shape[1] != d or ck.data.shape[1] != d:
        raise ValueError(
            f"context dimension mismatch: scorer expects {d}, "
            f"got query {cq.data.shape[1]}, key {ck.data.shape[1]}"
        )
    wd, bd, vd = params.w.data, params.b.data, params.v.data
    wk, wq = wd[:, :d], wd[:, d:]
    kproj = np.einsum("mc,hc->mh", ck.data, wk)
    qproj = np.einsum("nc,hc->nh", cq.data, wq)
    pre = qproj[:, None, :] + kproj[None, :, :] + bd
    t = np.tanh(pre)
    out = np.einsum("nmh,h->nm", t, vd)
    cqd, ckd = cq.data, ck.data

    def backward(g):
        dv = np.einsum("nm,nmh->h", g, t)
        dpre = (g[:, :, None] * vd) * (1.0 - t * t)
        db = dpre.sum(axis=(0, 1))
        dq = dpre.sum(axis=1)
        dk = dpre.sum(axis=0)
        dw = np.concatenate([dk.T @ ckd, dq.T @ cqd], axis=1)
        return dq @ wq, dk @ wk, dw, db, dv

    return ad.make_node(out, (cq, ck, params.w, params.b, params.v), backward)


def attention_score(query: Tensor, key: Tensor, params: PointerParams) -> Tensor:
    """Score one (query, key) pair: v . tanh(W [key; query] + b).

    Returns a 1x1 tensor; its single entry equals the corresponding entry
    of :func:`score_all` bit-for-bit.
    """
    if query.data.ndim != 1 or key.data.ndim != 1:
        raise ValueError("attention_score takes single context vectors")
    return _attention_kernel(_as_row(query), _as_row(key), params)


def _as_row(x: Tensor) -> Tensor:
    n = x.data.shape[0]

    def backward(g):
        return (g[0],)

    return ad.make_node(x.data[None, :], (x,), backward)


def score_all(contexts: list[Tensor], params: PointerParams) -> ScoreMatrix:
    """All ordered pairs at once, diagonal included."""
    if not contexts:
        raise ValueError("score_all needs at least one context vector")
    c = ad.stack(contexts)
    return ScoreMatrix(_attention_kernel(c, c, params), params.orientation)


def target_matrix(sentence: Sentence, orientation: str) -> np.ndarray:
    """Gold 0/1 training targets for one orientation.

    Heads: row i is one-hot at the gold head of token i+1, all-zero when
    that token is the top.  Dependents: row i marks every token governed
    by token i+1, all-zero for leaves.  The two are transposes of each
    other; the diagonal is always zero.
    """
    if orientation not in (HEADS, DEPENDENTS):
        raise ValueError(f"unknown orientation {orientation!r}")
    heads = sentence.gold_heads()
    n = len(heads)
    m = np.zeros((n, n))
    for i, h in enumerate(heads):
        if h == 0:
            continue
        if orientation == HEADS:
            m[i, h - 1] = 1.0
        else:
            m[h - 1, i] = 1.0
    return m


def init_pointer_params(
    rng: np.random.Generator,
    context_dim: int,
    orientation: str,
    hidden: int = PTR_HIDDEN,
    activation: str = "sigmoid",
) -> PointerParams:
    return PointerParams(
        w=Tensor(glorot(rng, 2 * context_dim, hidden, (hidden, 2 * context_dim)),
                 requires_grad=True),
        b=Tensor(np.zeros(hidden), requires_grad=True),
        v=Tensor(glorot_vector(rng, hidden), requires_grad=True),
        orientation=orientation,
        activation=activation,
    )
