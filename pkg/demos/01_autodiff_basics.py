"""A tour of the tape: build an expression, differentiate it, check it
numerically, then let Adam walk a tiny quadratic downhill."""
import numpy as np

import dualpointer.autodiff as ad
from dualpointer.optim import Adam

# ---------------------------------------------------------------- forward
# Tensors wrap float64 arrays.  Operations record closures on a tape so
# backward() can replay them in reverse.
w = ad.Tensor(np.array([[0.5, -0.3], [0.1, 0.8]]), requires_grad=True)
x = ad.Tensor(np.array([1.0, 2.0]))
b = ad.Tensor(np.array([0.1, -0.1]), requires_grad=True)

h = ad.tanh(ad.affine(w, x, b))
loss = ad.sum_all(ad.mul(h, h))
print("loss =", loss.item())

# --------------------------------------------------------------- backward
loss.backward()
print("dloss/dw =\n", w.grad)

# ------------------------------------------------ finite-difference check
# Nudge one weight both ways and compare the slope with the tape's answer.
eps = 1e-6
analytic = w.grad[1, 0]


def loss_at(w10):
    wd = w.data.copy()
    wd[1, 0] = w10
    wt = ad.Tensor(wd)
    ht = ad.tanh(ad.affine(wt, x, b))
    return ad.sum_all(ad.mul(ht, ht)).item()


numeric = (loss_at(0.1 + eps) - loss_at(0.1 - eps)) / (2 * eps)
print(f"analytic {analytic:.10f}  numeric {numeric:.10f}")

# -------------------------------------------------------------- optimizer
# Adam drives a 2-vector toward the minimum of |p - target|^2.
p = ad.Tensor(np.array([4.0, -2.0]), requires_grad=True)
target = np.array([1.0, 1.0])
opt = Adam([p], alpha=0.05)
for step in range(200):
    opt.zero_grad()
    diff = ad.sub(p, ad.Tensor(target))
    value = ad.sum_all(ad.mul(diff, diff))
    value.backward()
    opt.step()
    if step % 50 == 0:
        print(f"step {step:3d}  loss {value.item():.6f}  p = {p.data}")
print("final p =", p.data)
