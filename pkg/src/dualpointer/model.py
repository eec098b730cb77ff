"""The full parser model: vocabulary, encoder, and one or two pointer nets.

A model carries its training mode.  Joint training produces both scorers
and serves the merged (p1) and single-matrix (p2, p3) inference variants;
single-task models serve only their own variant (p4 heads, p5 dependents).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conll import Sentence
from .encoder import (
    BILSTM_HIDDEN,
    BILSTM_LAYERS,
    D_PRETRAINED,
    D_RANDOM,
    EncoderParams,
    bilstm_encode,
    encode_tokens,
    init_encoder_params,
    token_rows,
)
from .pointer import (
    DEPENDENTS,
    HEADS,
    PTR_HIDDEN,
    PointerParams,
    ScoreMatrix,
    init_pointer_params,
    score_all,
)
from .vocab import EmbeddingTable, Vocabulary

__all__ = [
    "JOINT",
    "HEADS_ONLY",
    "DEPS_ONLY",
    "MODES",
    "VARIANTS",
    "VARIANT_REQUIRES",
    "ModeMismatchError",
    "ModelParams",
    "init_model",
    "require_variant",
    "score_sentence",
]

JOINT = "joint"
HEADS_ONLY = "heads-only"
DEPS_ONLY = "deps-only"
MODES = (JOINT, HEADS_ONLY, DEPS_ONLY)

# inference variant -> training mode that can serve it
VARIANT_REQUIRES = {
    "p1": JOINT,
    "p2": JOINT,
    "p3": JOINT,
    "p4": HEADS_ONLY,
    "p5": DEPS_ONLY,
}
VARIANTS = tuple(VARIANT_REQUIRES)


class ModeMismatchError(Exception):
    """An inference variant was requested from a model of the wrong mode."""


@dataclass
class ModelParams:
    vocab: Vocabulary
    encoder: EncoderParams
    heads_net: PointerParams | None
    deps_net: PointerParams | None
    mode: str

    def named_params(self) -> list[tuple[str, object]]:
        """Every trainable tensor in a fixed, documented order.

        The order is load-bearing: optimizer slots, serialization records
        and gradient-check reports all index into it.
        """
        named = [
            ("emb.pretrained", self.encoder.pretrained.weights),
            ("emb.random", self.encoder.random.weights),
        ]
        for li, (fwd, bwd) in enumerate(self.encoder.layers):
            named += [
                (f"lstm.l{li}.fwd.w", fwd.w),
                (f"lstm.l{li}.fwd.b", fwd.b),
                (f"lstm.l{li}.bwd.w", bwd.w),
                (f"lstm.l{li}.bwd.b", bwd.b),
            ]
        for tag, net in (("heads", self.heads_net), ("deps", self.deps_net)):
            if net is not None:
                named += [(f"ptr.{tag}.w", net.w), (f"ptr.{tag}.b", net.b),
                          (f"ptr.{tag}.v", net.v)]
        return named

    @property
    def activation(self) -> str:
        net = self.heads_net or self.deps_net
        return net.activation


def init_model(
    rng: np.random.Generator,
    vocab: Vocabulary,
    pretrained: EmbeddingTable | None = None,
    mode: str = JOINT,
    d_pretrained: int = D_PRETRAINED,
    d_random: int = D_RANDOM,
    bilstm_hidden: int = BILSTM_HIDDEN,
    bilstm_levels: int = BILSTM_LAYERS,
    ptr_hidden: int = PTR_HIDDEN,
    activation: str = "sigmoid",
) -> ModelParams:
    """Draw all parameters.  Draw order is fixed (encoder, heads net, deps
    net) so one seed plus one configuration pins every value."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if activation not in ("sigmoid", "tanh"):
        raise ValueError(f"unknown output activation {activation!r}")
    encoder = init_encoder_params(
        rng, vocab, pretrained, d_pretrained, d_random, bilstm_hidden, bilstm_levels
    )
    ctx = encoder.context_dim
    heads_net = deps_net = None
    if mode in (JOINT, HEADS_ONLY):
        heads_net = init_pointer_params(rng, ctx, HEADS, ptr_hidden, activation)
    if mode in (JOINT, DEPS_ONLY):
        deps_net = init_pointer_params(rng, ctx, DEPENDENTS, ptr_hidden, activation)
    return ModelParams(vocab, encoder, heads_net, deps_net, mode)


def require_variant(model: ModelParams, variant: str) -> None:
    if variant not in VARIANT_REQUIRES:
        raise ModeMismatchError(f"unknown inference variant {variant!r}")
    needed = VARIANT_REQUIRES[variant]
    if model.mode != needed:
        raise ModeMismatchError(
            f"variant {variant} needs a {needed} model, this model was trained {model.mode}"
        )


@dataclass
class SentenceScores:
    heads: ScoreMatrix | None
    deps: ScoreMatrix | None
    used_rows: list[tuple[int, int]]


def score_sentence(
    model: ModelParams,
    sentence: Sentence,
    training: bool = False,
    alpha: float = 0.25,
    rng: np.random.Generator | None = None,
) -> SentenceScores:
    """Encode and run whichever pointer nets the model owns."""
    rows = token_rows(sentence, model.encoder, model.vocab, training, alpha, rng)
    encodings = encode_tokens(sentence, model.encoder, model.vocab, rows=rows)
    contexts = bilstm_encode(encodings, model.encoder)
    heads = score_all(contexts, model.heads_net) if model.heads_net else None
    deps = score_all(contexts, model.deps_net) if model.deps_net else None
    return SentenceScores(heads=heads, deps=deps, used_rows=rows)
