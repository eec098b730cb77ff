"""Sentence encoder: dual embedding lookup with word dropout, then a
2-level bidirectional LSTM producing one context vector per token.

Each token is the concatenation of a pretrained-map vector and a randomly
initialized vector, both fine-tuned during training.  Word dropout replaces
both halves with the corresponding unknown vectors, with probability
decreasing in the training-set frequency of the word.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .conll import Sentence
from .vocab import UNKNOWN_ID, EmbeddingTable, Vocabulary

__all__ = [
    "LstmWeights",
    "EncoderParams",
    "dropout_prob",
    "token_rows",
    "encode_tokens",
    "lstm_cell",
    "bilstm_encode",
    "glorot",
    "glorot_vector",
    "init_lstm",
    "init_embedding_data",
    "init_encoder_params",
]

D_PRETRAINED = 100
D_RANDOM = 150
BILSTM_HIDDEN = 200
BILSTM_LAYERS = 2


def gather_rows(table: Tensor, indices: list[int]) -> Tensor:
    """Select rows of a 2-d tensor; gradient scatters back (repeats add)."""
    idx = np.asarray(indices, dtype=np.intp)
    shape = table.data.shape

    def backward(g):
        full = np.zeros(shape)
        np.add.at(full, idx, g)
        return (full,)

    return ad.make_node(table.data[idx], (table,), backward)


def matrix_row(m: Tensor, i: int) -> Tensor:
    shape = m.data.shape

    def backward(g):
        full = np.zeros(shape)
        full[i] = g
        return (full,)

    return ad.make_node(m.data[i], (m,), backward)


@dataclass
class LstmWeights:
    """One direction of one LSTM layer: stacked gate affine.

    ``w`` is [4h x (input + h)] with gate blocks in order input, forget,
    output, candidate; ``b`` is [4h].
    """

    w: Tensor
    b: Tensor
    hidden: int


@dataclass
class EncoderParams:
    pretrained: EmbeddingTable
    random: EmbeddingTable
    layers: list[tuple[LstmWeights, LstmWeights]]  # (forward, backward) per level

    @property
    def encoding_dim(self) -> int:
        return self.pretrained.dim + self.random.dim

    @property
    def context_dim(self) -> int:
        return 2 * self.layers[-1][0].hidden


def dropout_prob(frequency: int, alpha: float) -> float:
    """Chance of replacing a training token with the unknown vector."""
    if frequency < 1:
        raise ValueError(f"frequency must be >= 1, got {frequency}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return alpha / (alpha + frequency)


def token_rows(
    sentence: Sentence,
    params: EncoderParams,
    vocab: Vocabulary,
    training: bool = False,
    alpha: float = 0.25,
    rng: np.random.Generator | None = None,
) -> list[tuple[int, int]]:
    """Resolve each token to (pretrained row, random row), applying word
    dropout when training.  A dropout hit replaces both lookups at once."""
    if training and rng is None:
        raise ValueError("training-mode encoding needs an rng")
    rows = []
    for tok in sentence:
        tok_id = vocab.lookup(tok.form)
        if params.pretrained.index is not None:
            pre_row = params.pretrained.row_of(tok.form)
        else:
            pre_row = tok_id
        if training and tok_id != UNKNOWN_ID:
            p = dropout_prob(vocab.frequency(tok_id), alpha)
            if rng.random() < p:
                pre_row, tok_id = UNKNOWN_ID, UNKNOWN_ID
        rows.append((pre_row, tok_id))
    return rows


def encode_tokens(
    sentence: Sentence,
    params: EncoderParams,
    vocab: Vocabulary,
    training: bool = False,
    alpha: float = 0.25,
    rng: np.random.Generator | None = None,
    rows: list[tuple[int, int]] | None = None,
) -> list[Tensor]:
    """Per-token concatenated embedding vectors.

    ``rows`` can carry a precomputed :func:`token_rows` result so callers
    that also need the touched row indices draw the dropout mask once.
    """
    if rows is None:
        rows = token_rows(sentence, params, vocab, training, alpha, rng)
    pre = gather_rows(params.pretrained.weights, [r[0] for r in rows])
    rand = gather_rows(params.random.weights, [r[1] for r in rows])
    return [
        ad.concat([matrix_row(pre, i), matrix_row(rand, i)])
        for i in range(len(rows))
    ]


def lstm_cell(x: Tensor, h_prev: Tensor, c_prev: Tensor, weights: LstmWeights):
    """One LSTM step: returns (h, c)."""
    h = weights.hidden
    if x.data.ndim != 1 or h_prev.data.shape != (h,) or c_prev.data.shape != (h,):
        raise ValueError(
            f"lstm_cell shapes: x {x.data.shape}, h {h_prev.data.shape}, "
            f"c {c_prev.data.shape}, hidden {h}"
        )
    z = ad.affine(weights.w, ad.concat([x, h_prev]), weights.b)
    i = ad.sigmoid(ad.segment(z, 0, h))
    f = ad.sigmoid(ad.segment(z, h, 2 * h))
    o = ad.sigmoid(ad.segment(z, 2 * h, 3 * h))
    g = ad.tanh(ad.segment(z, 3 * h, 4 * h))
    c = ad.add(ad.mul(f, c_prev), ad.mul(i, g))
    return ad.mul(o, ad.tanh(c)), c


def _run_direction(xs: list[Tensor], weights: LstmWeights) -> list[Tensor]:
    h = Tensor(np.zeros(weights.hidden))
    c = Tensor(np.zeros(weights.hidden))
    out = []
    for x in xs:
        h, c = lstm_cell(x, h, c, weights)
        out.append(h)
    return out


def bilstm_encode(encodings: list[Tensor], params: EncoderParams) -> list[Tensor]:
    """Stacked bidirectional pass; one context vector per input position."""
    if not encodings:
        raise ValueError("cannot encode an empty sentence")
    xs = encodings
    for fwd, bwd in params.layers:
        f_states = _run_direction(xs, fwd)
        b_states = _run_direction(list(reversed(xs)), bwd)
        b_states.reverse()
        xs = [ad.concat([f, b]) for f, b in zip(f_states, b_states)]
    return xs


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def glorot_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    # a lone vector: both fans are its own length
    return rng.uniform(-np.sqrt(3.0 / dim), np.sqrt(3.0 / dim), size=dim)


def init_lstm(rng: np.random.Generator, input_dim: int, hidden: int) -> LstmWeights:
    """Per-gate Glorot blocks stacked into one matrix, zero biases."""
    blocks = [
        glorot(rng, input_dim + hidden, hidden, (hidden, input_dim + hidden))
        for _ in range(4)
    ]
    return LstmWeights(
        w=Tensor(np.vstack(blocks), requires_grad=True),
        b=Tensor(np.zeros(4 * hidden), requires_grad=True),
        hidden=hidden,
    )


def init_embedding_data(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    """Embedding matrix with a zero unknown row; per-row scale from the
    vector dimension alone, the lookup-table reading of Glorot."""
    data = rng.uniform(-np.sqrt(3.0 / dim), np.sqrt(3.0 / dim), size=(size, dim))
    data[UNKNOWN_ID] = 0.0
    return data


def init_encoder_params(
    rng: np.random.Generator,
    vocab: Vocabulary,
    pretrained: EmbeddingTable | None,
    d_pretrained: int = D_PRETRAINED,
    d_random: int = D_RANDOM,
    hidden: int = BILSTM_HIDDEN,
    levels: int = BILSTM_LAYERS,
) -> EncoderParams:
    """Build all encoder parameters.

    Without a pretrained file the first map falls back to a second
    randomly initialized, vocabulary-indexed table of the same dimension.
    Draw order is fixed: pretrained fallback, random map, then LSTM levels
    forward-before-backward.
    """
    if pretrained is None:
        pretrained = EmbeddingTable(
            Tensor(init_embedding_data(rng, len(vocab), d_pretrained), requires_grad=True),
            index=None,
        )
    random_table = EmbeddingTable(
        Tensor(init_embedding_data(rng, len(vocab), d_random), requires_grad=True),
        index=None,
    )
    layers = []
    input_dim = pretrained.dim + d_random
    for _ in range(levels):
        fwd = init_lstm(rng, input_dim, hidden)
        bwd = init_lstm(rng, input_dim, hidden)
        layers.append((fwd, bwd))
        input_dim = 2 * hidden
    return EncoderParams(pretrained=pretrained, random=random_table, layers=layers)
