"""A tour of the tape-based autodiff engine everything is built on.

Operations run forward with numpy; when executed inside a Tape context
they record their local gradient rule, and backward() replays the tape in
reverse.  The check at the end compares an analytic gradient against
central finite differences, the same oracle the test suite uses.
"""

import numpy as np

from phishloc import tensor as T

# --- forward + backward on a tiny expression --------------------------------
x = T.Tensor([3.0], requires_grad=True)
with T.Tape() as tape:
    y = T.tsum(T.square(x))          # y = x^2
T.backward(y, tape)
print(f"d(x^2)/dx at x=3: {x.grad[0]} (expect 6)")

# --- a small network, end to end ---------------------------------------------
rng = np.random.default_rng(0)
w1 = T.Tensor(rng.normal(scale=0.3, size=(4, 8)), requires_grad=True)
w2 = T.Tensor(rng.normal(scale=0.3, size=(8, 2)), requires_grad=True)
inputs = T.Tensor(rng.normal(size=(16, 4)))
labels = rng.integers(0, 2, size=16)


def forward(w1_t, w2_t):
    hidden = T.relu(T.matmul(inputs, w1_t))
    probs = T.softmax(T.matmul(hidden, w2_t))
    picked = T.select_index(probs, labels)
    return T.tmean(T.neg(T.log(T.clamp(picked, 1e-12, 1.0))))


with T.Tape() as tape:
    loss = forward(w1, w2)
T.backward(loss, tape)
print(f"\ncross-entropy of a random 2-layer net: {loss.item():.4f}")
print(f"gradient shapes: w1 {w1.grad.shape}, w2 {w2.grad.shape}")

# --- trust, but verify: finite differences -----------------------------------
h = 1e-6
worst = 0.0
flat = w1.data.reshape(-1)
grad = w1.grad.reshape(-1)
for idx in rng.choice(flat.size, size=8, replace=False):
    orig = flat[idx]
    flat[idx] = orig + h
    up = forward(w1, w2).item()
    flat[idx] = orig - h
    down = forward(w1, w2).item()
    flat[idx] = orig
    fd = (up - down) / (2 * h)
    worst = max(worst, abs(grad[idx] - fd) / max(1.0, abs(fd)))
print(f"max relative error vs central differences on 8 coordinates: {worst:.2e}")
