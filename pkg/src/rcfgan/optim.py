"""Adam optimizer (bias-corrected, Kingma-Ba form) for Tensor parameters."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamSlot:
    """First/second moment state for a single parameter array."""
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0

    @classmethod
    def for_shape(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape))


def adam_step(values, grad, slot, lr, betas=(0.9, 0.999), eps=1e-8):
    """One Adam update. Mutates ``slot``, returns the new parameter values.

    m and v are exponential moving averages of the gradient and its square;
    both are bias-corrected by 1 / (1 - beta^t) before forming the update
    lr * m_hat / (sqrt(v_hat) + eps).
    """
    if lr <= 0.0:
        raise ValueError(f"adam_step needs lr > 0, got {lr}")
    beta1, beta2 = betas
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ValueError(f"adam betas must lie in [0, 1), got {betas}")
    if values.shape != grad.shape:
        raise ValueError(f"parameter/gradient shape mismatch: "
                         f"{values.shape} vs {grad.shape}")
    slot.step_count += 1
    t = slot.step_count
    slot.m = beta1 * slot.m + (1.0 - beta1) * grad
    slot.v = beta2 * slot.v + (1.0 - beta2) * grad * grad
    m_hat = slot.m / (1.0 - beta1 ** t)
    v_hat = slot.v / (1.0 - beta2 ** t)
    return values - lr * m_hat / (np.sqrt(v_hat) + eps)


@dataclass
class Adam:
    """Adam over a list of Tensor parameters, one slot per parameter."""

    params: list
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    slots: list = field(default_factory=list)

    def __post_init__(self):
        if self.lr <= 0.0:
            raise ValueError(f"Adam needs lr > 0, got {self.lr}")
        beta1, beta2 = self.betas
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValueError(f"adam betas must lie in [0, 1), got {self.betas}")
        self.slots = [AdamSlot(np.zeros_like(p.data), np.zeros_like(p.data))
                      for p in self.params]

    def step(self):
        for i, (p, slot) in enumerate(zip(self.params, self.slots)):
            if p.grad is None:
                raise ValueError(f"parameter {i} has no gradient; "
                                 "run backward before step")
            p.data = adam_step(p.data, p.grad, slot, self.lr,
                               self.betas, self.eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None
