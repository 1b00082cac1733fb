"""Frequency and latent sampling for the CF distance.

Two frequency regimes:

* fixed Gaussian - draws t ~ N(0, variance I) afresh each call;
* scale mixture - draws a standard normal base and per-row noise, feeds the
  noise through a small net, and scales the base elementwise by
  softplus(net(noise)) + 1e-4. The additive floor keeps every scale
  positive, and the base stays a plain leaf so gradients reach only the
  net (reparameterized sampling).

Latent draws for the generator come from sample_latent with their own
variance (the trainer uses a smaller one than the frequency prior).
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

SCALE_FLOOR = 1e-4


@dataclass
class LatentSpec:
    """Dimension and variance of an isotropic Gaussian latent prior."""

    dim: int
    variance: float = 1.0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"latent dim must be >= 1, got {self.dim}")
        if self.variance <= 0.0:
            raise ValueError(f"latent variance must be > 0, got {self.variance}")


def sample_latent(batch, spec, rng):
    """(batch, dim) Gaussian draw as a grad-free leaf tensor."""
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    std = np.sqrt(spec.variance)
    return Tensor(rng.normal(0.0, std, size=(batch, spec.dim)))


def sample_fixed(k, dim, variance, rng):
    """k frequencies from N(0, variance I), as a grad-free leaf tensor."""
    if k < 1:
        raise ValueError(f"frequency count must be >= 1, got {k}")
    if dim < 1:
        raise ValueError(f"frequency dim must be >= 1, got {dim}")
    if variance <= 0.0:
        raise ValueError(f"frequency variance must be > 0, got {variance}")
    std = np.sqrt(variance)
    return Tensor(rng.normal(0.0, std, size=(k, dim)))


def sample_mixture(base, sigma_inputs, tnet):
    """Scale-mixture frequencies: base * (softplus(tnet(sigma)) + 1e-4).

    base and sigma_inputs must be (k, dim) with matching shapes (the rows are
    paired). Gradients flow into the t-net parameters only; the base is
    treated as a fixed draw.
    """
    base = ad.as_tensor(base)
    sigma_inputs = ad.as_tensor(sigma_inputs)
    if base.shape != sigma_inputs.shape:
        raise ad.ShapeError(
            f"base and sigma draws must pair up row for row, got "
            f"{base.shape} and {sigma_inputs.shape}")
    raw = tnet.forward(sigma_inputs)
    scales = ad.add(ad.softplus(raw), SCALE_FLOOR)
    return ad.mul(base.detach(), scales)


@dataclass
class FreqSampler:
    """Draws frequency batches under one of the two regimes.

    mode "fixed_gaussian" ignores the net; "scale_mixture" requires one.
    """

    dim: int
    mode: str = "fixed_gaussian"
    base_variance: float = 1.0
    tnet: object = None

    def __post_init__(self):
        if self.mode not in ("fixed_gaussian", "scale_mixture"):
            raise ValueError(f"unknown frequency mode {self.mode!r}")
        if self.dim < 1:
            raise ValueError(f"frequency dim must be >= 1, got {self.dim}")
        if self.base_variance <= 0.0:
            raise ValueError(f"base variance must be > 0, got {self.base_variance}")
        if self.mode == "scale_mixture" and self.tnet is None:
            raise ValueError("scale_mixture mode needs a t-net")

    def draw(self, k, rng, track_grad=True):
        """A (k, dim) frequency tensor. track_grad only matters for the
        mixture mode: False detaches the scales (generator steps must not
        push gradient into the t-net)."""
        if self.mode == "fixed_gaussian":
            return sample_fixed(k, self.dim, self.base_variance, rng)
        base = sample_fixed(k, self.dim, self.base_variance, rng)
        sigma = Tensor(rng.normal(0.0, 1.0, size=(k, self.dim)))
        freqs = sample_mixture(base, sigma, self.tnet)
        return freqs if track_grad else freqs.detach()
