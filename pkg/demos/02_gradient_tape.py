#!/usr/bin/env python3
"""Tour of the gradient tape: record ops, replay backward, verify numerically.

Every differentiable op is checked against central differences; the worst
relative error should sit far below 1e-4 when inputs avoid ReLU kinks.
"""
import numpy as np

from thermoface import GradTape, Tensor, grad_check
from thermoface import autodiff as ad

rng = np.random.default_rng(0)

# =========================================================================
# Recording and replaying a small computation: loss = sum((relu(Wx+b))^2)
# =========================================================================
tape = GradTape()
x = tape.watch(rng.normal(size=5))
w = tape.watch(rng.normal(size=(3, 5)))
b = tape.watch(np.zeros(3))
loss = ad.total(ad.square(ad.relu(ad.dense(x, w, b))))
grads = tape.gradients(loss)
print(f"loss = {float(loss.data):.4f}")
print(f"grad shapes: x {grads[x.tid].shape}, W {grads[w.tid].shape}, b {grads[b.tid].shape}")

# =========================================================================
# Numerical verification, op by op
# =========================================================================
def loss_of(op):
    return lambda t: ad.total(ad.square(op(t)))

kernels = rng.normal(size=(3, 2, 3, 3))
bias = rng.normal(size=3)
image = rng.uniform(0.1, 1.0, (2, 7, 7))
dense_w = rng.normal(size=(4, 6))
dense_b = rng.normal(size=4)

checks = [
    ("conv2d (input)", loss_of(lambda t: ad.conv2d(t, Tensor(kernels), Tensor(bias))),
     image),
    ("conv2d (kernels)", loss_of(lambda t: ad.conv2d(Tensor(image), t, Tensor(bias))),
     kernels),
    ("relu", loss_of(ad.relu), rng.choice([-1.0, 1.0], 12) * rng.uniform(0.1, 1.0, 12)),
    ("max_pool2d", loss_of(lambda t: ad.max_pool2d(t, 2)),
     rng.permutation(36).astype(float).reshape(1, 6, 6)),
    ("dense (input)", loss_of(lambda t: ad.dense(t, Tensor(dense_w), Tensor(dense_b))),
     rng.normal(size=6)),
    ("sqrt", lambda t: ad.total(ad.sqrt(t)), rng.uniform(0.5, 2.0, 8)),
]

print("\nop                  max relative error (eps = 1e-4)")
for name, f, arg in checks:
    print(f"{name:<20s}{grad_check(f, arg, 1e-4):.3e}")
