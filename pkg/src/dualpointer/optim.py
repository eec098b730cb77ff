"""Adam optimizer over tape tensors.

One optimizer instance owns first/second moment buffers for every parameter
it manages and a single shared step counter.  Embedding tables are updated
row-wise: only rows that actually received gradient in the current step have
their moments decayed and their values moved, which keeps per-sentence
updates cheap for large vocabularies.
"""
from __future__ import annotations

import logging

import numpy as np

from .autodiff import Tensor

__all__ = ["OptimizerState", "Adam"]

log = logging.getLogger(__name__)


class OptimizerState:
    """Moment buffers and step count for one parameter set.

    Kept separate from the update logic so it can be serialized or
    inspected without touching the optimizer itself.
    """

    def __init__(self, params: list[Tensor]):
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.t = 0


class Adam:
    """Adam with bias correction (step size alpha, decay rates beta1/beta2).

    ``sparse_rows`` marks parameters (by position) whose updates should
    touch only rows with nonzero gradient; everything else is updated
    densely.
    """

    def __init__(
        self,
        params: list[Tensor],
        alpha: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        sparse_rows: set[int] | None = None,
    ):
        self.params = params
        self.alpha = alpha
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.sparse_rows = sparse_rows or set()
        self.state = OptimizerState(params)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self, row_sets: dict[int, set[int]] | None = None) -> bool:
        """Apply one update from the gradients currently on the parameters.

        ``row_sets`` maps sparse parameter positions to the row indices
        touched this step; rows outside the set keep their moments frozen.
        Returns False (and applies nothing) if any gradient is non-finite.
        """
        grads: list[np.ndarray | None] = []
        for p in self.params:
            if p.grad is None:
                grads.append(None)
                continue
            if not np.all(np.isfinite(p.grad)):
                log.warning("skipping optimizer step: non-finite gradient")
                return False
            grads.append(p.grad)

        self.state.t += 1
        t = self.state.t
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for i, (p, g) in enumerate(zip(self.params, grads)):
            if g is None:
                continue
            if i in self.sparse_rows and row_sets is not None:
                rows = sorted(row_sets.get(i, ()))
                if not rows:
                    continue
                adam_step_rows(
                    p.data, g, self.state.m[i], self.state.v[i], rows,
                    self.alpha, self.beta1, self.beta2, self.eps, bc1, bc2,
                )
            else:
                adam_step(
                    p.data, g, self.state.m[i], self.state.v[i],
                    self.alpha, self.beta1, self.beta2, self.eps, bc1, bc2,
                )
        return True


def adam_step(param, grad, m, v, alpha, beta1, beta2, eps, bc1, bc2) -> None:
    """In-place dense Adam update with precomputed bias corrections."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    mhat = m / bc1
    vhat = v / bc2
    param -= alpha * mhat / (np.sqrt(vhat) + eps)


def adam_step_rows(param, grad, m, v, rows, alpha, beta1, beta2, eps, bc1, bc2) -> None:
    """Adam update restricted to the given rows of a 2-d parameter."""
    idx = np.asarray(rows, dtype=np.intp)
    g = grad[idx]
    m[idx] = beta1 * m[idx] + (1.0 - beta1) * g
    v[idx] = beta2 * v[idx] + (1.0 - beta2) * (g * g)
    mhat = m[idx] / bc1
    vhat = v[idx] / bc2
    param[idx] -= alpha * mhat / (np.sqrt(vhat) + eps)
