"""Whole-model gradient verification.

Backpropagated gradients of the joint sentence loss are compared against
central finite differences on a random synthetic sentence.  Every parameter
tensor is covered twice over: a deterministic sample of individual entries
is perturbed one at a time, and a couple of random unit directions probe
the tensor as a whole (a directional derivative mixes every entry, so a
systematically wrong backward rule cannot hide in unsampled entries).
"""
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .conll import Sentence, Token
from .model import JOINT, init_model
from .training import TrainConfig, sentence_loss
from .vocab import build_vocab

# Comparisons are relative above this scale and absolute below it.  With the
# default step 1e-5 the difference quotient carries roundoff noise of about
# 1e-11 in absolute terms, so a pure-relative error on a true-zero gradient
# entry would read as 1.0 no matter how correct the backward pass is.
DENOM_FLOOR = 1e-6


def compare(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), DENOM_FLOOR)


def random_sentence(rng: np.random.Generator, n_tokens: int) -> Sentence:
    """Random forms over a small pool (repeats exercise shared embedding
    rows) with a uniformly random valid gold tree."""
    order = rng.permutation(n_tokens)
    heads = [0] * n_tokens
    for pos in range(1, n_tokens):
        heads[order[pos]] = int(order[rng.integers(0, pos)]) + 1
    tokens = [
        Token(i + 1, f"w{rng.integers(0, n_tokens)}", None, heads[i])
        for i in range(n_tokens)
    ]
    return Sentence(tokens)


@dataclass
class TensorCheck:
    name: str
    size: int
    checked: int
    worst: float
    worst_at: str

    @property
    def passed(self) -> bool:
        return np.isfinite(self.worst)


@dataclass
class GradCheckReport:
    checks: list[TensorCheck] = field(default_factory=list)
    tolerance: float = 1e-4
    seconds: float = 0.0

    @property
    def worst(self) -> float:
        return max((c.worst for c in self.checks), default=0.0)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and self.worst < self.tolerance


def run_gradcheck(
    seed: int = 1,
    n_tokens: int = 5,
    tolerance: float = 1e-4,
    step: float = 1e-5,
    samples_per_tensor: int = 48,
    directions_per_tensor: int = 2,
    mode: str = JOINT,
    activation: str = "sigmoid",
    d_pretrained: int = 100,
    d_random: int = 150,
    bilstm_hidden: int = 16,
    bilstm_levels: int = 2,
    ptr_hidden: int = 100,
) -> GradCheckReport:
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    sentence = random_sentence(rng, n_tokens)
    vocab = build_vocab([sentence])
    model = init_model(
        rng, vocab, mode=mode,
        d_pretrained=d_pretrained, d_random=d_random,
        bilstm_hidden=bilstm_hidden, bilstm_levels=bilstm_levels,
        ptr_hidden=ptr_hidden, activation=activation,
    )
    config = TrainConfig(
        mode=mode, activation=activation, alpha_word_dropout=0.0,
        d_pretrained=d_pretrained, d_random=d_random,
        bilstm_hidden=bilstm_hidden, bilstm_levels=bilstm_levels,
        ptr_hidden=ptr_hidden,
    )

    def loss_value() -> float:
        with ad.no_grad():
            loss, _ = sentence_loss(model, sentence, config, training=False)
        return loss.item()

    loss, _ = sentence_loss(model, sentence, config, training=False)
    loss.backward()
    analytic = {}
    for name, param in model.named_params():
        if param.grad is None:
            raise RuntimeError(f"no gradient reached {name}")
        analytic[name] = param.grad.copy()

    report = GradCheckReport(tolerance=tolerance)
    for name, param in model.named_params():
        grad = analytic[name].reshape(-1)
        data = param.data.reshape(-1)
        worst, worst_at = 0.0, "-"
        picked = rng.choice(
            data.size, size=min(samples_per_tensor, data.size), replace=False,
        )
        for idx in picked:
            orig = data[idx]
            data[idx] = orig + step
            hi = loss_value()
            data[idx] = orig - step
            lo = loss_value()
            data[idx] = orig
            err = compare(grad[idx], (hi - lo) / (2.0 * step))
            if err > worst:
                worst, worst_at = err, f"entry {int(idx)}"
        for probe in range(directions_per_tensor):
            direction = rng.standard_normal(data.size)
            direction /= np.linalg.norm(direction)
            saved = data.copy()
            data += step * direction
            hi = loss_value()
            data[:] = saved - step * direction
            lo = loss_value()
            data[:] = saved
            err = compare(float(grad @ direction), (hi - lo) / (2.0 * step))
            if err > worst:
                worst, worst_at = err, f"direction {probe}"
        report.checks.append(
            TensorCheck(name, data.size, len(picked) + directions_per_tensor,
                        worst, worst_at),
        )
    report.seconds = time.perf_counter() - started
    return report


def format_report(report: GradCheckReport) -> str:
    lines = []
    for c in report.checks:
        lines.append(
            f"{c.name:<20} size {c.size:>6}  checked {c.checked:>3}  "
            f"worst {c.worst:.3e}  at {c.worst_at}"
        )
    verdict = "PASS" if report.passed else "FAIL"
    lines.append(
        f"gradcheck: {verdict}  worst {report.worst:.3e}  "
        f"tolerance {report.tolerance:.0e}  ({report.seconds:.1f}s)"
    )
    return "\n".join(lines)
