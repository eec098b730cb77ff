"""Training: per-sentence joint (or single-task) updates with Adam, epoch
shuffling, dev-set model selection, and checkpointing.

One sentence is one optimizer step.  The loss is the mean binary
cross-entropy of each owned score matrix against its 0/1 target matrix,
the two tasks summed unweighted; gradients flow through the pointer nets
and the BiLSTM down to both embedding tables, of which only the rows used
by the sentence are updated.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .conll import Sentence
from .decoding import PunctuationPolicy, parse, uas
from .model import DEPS_ONLY, HEADS_ONLY, JOINT, MODES, ModelParams, init_model, score_sentence
from .modelio import load_model, save_model
from .optim import Adam
from .pointer import DEPENDENTS, HEADS, target_matrix
from .vocab import EmbeddingTable, build_vocab

__all__ = [
    "TrainConfig",
    "EpochRow",
    "Checkpoint",
    "default_variant",
    "sentence_loss",
    "train_sentence",
    "make_optimizer",
    "train",
]

log = logging.getLogger(__name__)

# positions of the embedding tables in ModelParams.named_params()
EMB_PRETRAINED_SLOT = 0
EMB_RANDOM_SLOT = 1


@dataclass
class TrainConfig:
    mode: str = JOINT
    epochs: int = 10
    seed: int = 1
    alpha_word_dropout: float = 0.25
    adam_alpha: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    d_pretrained: int = 100
    d_random: int = 150
    bilstm_hidden: int = 200
    bilstm_levels: int = 2
    ptr_hidden: int = 100
    activation: str = "sigmoid"
    root_agg: str = "max"
    punct_tags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")


def default_variant(mode: str) -> str:
    """The inference variant a model of this mode is evaluated with."""
    return {JOINT: "p1", HEADS_ONLY: "p4", DEPS_ONLY: "p5"}[mode]


@dataclass
class EpochRow:
    epoch: int
    mean_loss: float
    dev_uas: float
    skipped: int = 0


@dataclass
class Checkpoint:
    """A frozen model snapshot tagged with the epoch that produced it."""

    epoch: int
    dev_uas: float
    model_bytes: bytes

    def load(self) -> ModelParams:
        return load_model(io.BytesIO(self.model_bytes))


def sentence_loss(
    model: ModelParams,
    sentence: Sentence,
    config: TrainConfig,
    training: bool = True,
    rng: np.random.Generator | None = None,
):
    """Forward pass returning (loss tensor, embedding rows used)."""
    scored = score_sentence(
        model, sentence, training=training,
        alpha=config.alpha_word_dropout, rng=rng,
    )
    parts = []
    for matrix, orientation in ((scored.heads, HEADS), (scored.deps, DEPENDENTS)):
        if matrix is None:
            continue
        target = target_matrix(sentence, orientation)
        if model.activation == "tanh":
            parts.append(ad.mse_loss(ad.tanh(matrix.scores), target))
        else:
            parts.append(ad.bce_with_logits(matrix.scores, target))
    loss = parts[0] if len(parts) == 1 else ad.add(parts[0], parts[1])
    return loss, scored.used_rows


def make_optimizer(model: ModelParams, config: TrainConfig) -> Adam:
    params = [t for _, t in model.named_params()]
    return Adam(
        params,
        alpha=config.adam_alpha,
        beta1=config.adam_beta1,
        beta2=config.adam_beta2,
        eps=config.adam_eps,
        sparse_rows={EMB_PRETRAINED_SLOT, EMB_RANDOM_SLOT},
    )


def train_sentence(
    model: ModelParams,
    sentence: Sentence,
    config: TrainConfig,
    optimizer: Adam,
    rng: np.random.Generator,
    sentence_id: str = "?",
) -> float | None:
    """One forward/backward/update step.  Returns the loss value, or None
    when the step was skipped because the loss or a gradient was not
    finite."""
    loss, rows = sentence_loss(model, sentence, config, training=True, rng=rng)
    value = loss.item()
    if not np.isfinite(value):
        log.warning("sentence %s: non-finite loss, step skipped", sentence_id)
        optimizer.zero_grad()
        return None
    loss.backward()
    row_sets = {
        EMB_PRETRAINED_SLOT: {r[0] for r in rows},
        EMB_RANDOM_SLOT: {r[1] for r in rows},
    }
    applied = optimizer.step(row_sets=row_sets)
    optimizer.zero_grad()
    if not applied:
        log.warning("sentence %s: non-finite gradient, step skipped", sentence_id)
        return None
    return value


def train(
    corpus: list[Sentence],
    dev: list[Sentence],
    config: TrainConfig,
    pretrained: EmbeddingTable | None = None,
    on_epoch=None,
) -> tuple[Checkpoint, list[EpochRow]]:
    """Full training run; returns the best-dev checkpoint and the log.

    Sentences are shuffled each epoch with the run seed.  After every
    epoch the dev set is parsed in inference mode and the checkpoint with
    the highest dev UAS (earliest epoch on ties) is kept.
    """
    if not corpus:
        raise ValueError("empty training corpus")
    if not dev:
        raise ValueError("empty dev corpus")
    for si, s in enumerate(corpus):
        if len(s) == 0 or not s.has_gold_heads():
            raise ValueError(f"training sentence {si + 1} is empty or lacks gold heads")
    for si, s in enumerate(dev):
        if len(s) == 0 or not s.has_gold_heads():
            raise ValueError(f"dev sentence {si + 1} is empty or lacks gold heads")

    rng = np.random.default_rng(config.seed)
    vocab = build_vocab(corpus)
    model = init_model(
        rng, vocab, pretrained=pretrained, mode=config.mode,
        d_pretrained=config.d_pretrained, d_random=config.d_random,
        bilstm_hidden=config.bilstm_hidden, bilstm_levels=config.bilstm_levels,
        ptr_hidden=config.ptr_hidden, activation=config.activation,
    )
    optimizer = make_optimizer(model, config)
    variant = default_variant(config.mode)
    punct = PunctuationPolicy(frozenset(config.punct_tags))

    best: Checkpoint | None = None
    rows: list[EpochRow] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(corpus))
        total, counted, skipped = 0.0, 0, 0
        for si in order:
            value = train_sentence(
                model, corpus[si], config, optimizer, rng, sentence_id=str(si + 1)
            )
            if value is None:
                skipped += 1
            else:
                total += value
                counted += 1
        mean_loss = total / counted if counted else float("nan")

        predicted = [parse(s, model, variant, config.root_agg) for s in dev]
        dev_uas = uas(dev, predicted, punct)

        row = EpochRow(epoch=epoch, mean_loss=mean_loss, dev_uas=dev_uas, skipped=skipped)
        rows.append(row)
        log.info(
            "epoch %d: mean loss %.6f, dev UAS %.2f%%%s",
            epoch, mean_loss, dev_uas, f", {skipped} skipped" if skipped else "",
        )
        if on_epoch is not None:
            on_epoch(row)
        if best is None or dev_uas > best.dev_uas:
            buf = io.BytesIO()
            save_model(model, buf)
            best = Checkpoint(epoch=epoch, dev_uas=dev_uas, model_bytes=buf.getvalue())
    return best, rows
