"""Characteristic-function distance between sample sets.

The distance compares two empirical characteristic functions (ECFs) at a
shared set of k frequencies and averages a stabilized square root of a
per-frequency squared difference:

    distance = (1/k) sum_j sqrt(c_alpha(t_j) + eps)

``squared_diff`` gives the plain squared modulus of the ECF difference,

    c(t) = (re_x - re_y)^2 + (im_x - im_y)^2,

which splits exactly into an amplitude part and a phase part,

    c(t) = (|phi_x| - |phi_y|)^2 + 2 |phi_x||phi_y| (1 - cos(ang_x - ang_y)).

``alpha_weighted_diff`` reweights the two parts,

    c_alpha(t) = alpha (|phi_x| - |phi_y|)^2
               + (1 - alpha) 2 |phi_x||phi_y| (1 - cos(ang_x - ang_y)),

so alpha = 1 compares amplitudes only, alpha = 0 phases only, and
alpha = 0.5 recovers c(t) / 2 exactly. The phase part is computed as the
exact remainder c(t) minus the amplitude part, which equals

    2 |x||y| (1 - cos dang) = 2 (|x||y| - (re_x re_y + im_x im_y))

algebraically but needs no division by the moduli and cancels to exactly
zero (in floating point too) when the two evaluations coincide. Moduli are
evaluated as sqrt(re^2 + im^2 + 1e-24), flooring them at 1e-12.

Because every ECF has modulus at most 1, each c_alpha is at most 4; the
loss caps c_alpha at 4 - eps before the stabilized square root so the
distance respects the hard bound of 2 for any alpha in [0, 1], while
identical sample sets land exactly on sqrt(eps).
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import ShapeError, Tensor

SQRT_EPS_DEFAULT = 1e-12
MODULUS_GUARD = 1e-24  # inside the modulus sqrt; floors |phi| at 1e-12
PHASE_GUARD = 1e-12    # amplitude below this reports phase 0


@dataclass
class CfLossConfig:
    """Knobs of the CF distance: weighting and frequency count."""

    alpha: float = 0.5
    num_freqs: int = 64
    eps: float = SQRT_EPS_DEFAULT

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.num_freqs < 1:
            raise ValueError(f"num_freqs must be >= 1, got {self.num_freqs}")
        if self.eps <= 0.0:
            raise ValueError(f"eps must be > 0, got {self.eps}")


class FrequencyMismatchError(ValueError):
    """Two ECF evaluations do not share their frequency set."""


class EcfEval:
    """An ECF evaluated at k frequencies: a (2, k) tensor plus the freqs.

    Row 0 holds the real part, row 1 the imaginary part. The modulus never
    exceeds 1 and the value at t = 0 is exactly 1 + 0j.
    """

    __slots__ = ("re_im", "freqs")

    def __init__(self, re_im, freqs):
        if re_im.ndim != 2 or re_im.shape[0] != 2:
            raise ShapeError(f"EcfEval needs a (2, k) tensor, got {re_im.shape}")
        if freqs.ndim != 2 or freqs.shape[0] != re_im.shape[1]:
            raise ShapeError(f"freqs {freqs.shape} inconsistent with "
                             f"re_im {re_im.shape}")
        self.re_im = re_im
        self.freqs = freqs

    @property
    def num_freqs(self):
        return self.re_im.shape[1]

    @property
    def re(self):
        return self.re_im.data[0]

    @property
    def im(self):
        return self.re_im.data[1]

    def modulus(self):
        return np.hypot(self.re, self.im)


def ecf(samples, freqs):
    """Evaluate the empirical characteristic function of a sample set.

    samples: Tensor (n, m); freqs: Tensor (k, m). The result is a mean over
    samples of (cos, sin) projections, so it is 1 + 0j at t = 0 and has
    modulus at most 1 everywhere.
    """
    samples = ad.as_tensor(samples)
    freqs = ad.as_tensor(freqs)
    return EcfEval(ad.ecf_pair(samples, freqs), freqs)


def _check_shared_freqs(a, b):
    fa, fb = a.freqs, b.freqs
    if fa is b.freqs or fa.data is fb.data:
        return
    if fa.shape != fb.shape or not np.array_equal(fa.data, fb.data):
        raise FrequencyMismatchError(
            "ECF evaluations compare only at identical frequencies; "
            f"got freq sets of shape {fa.shape} and {fb.shape} that differ")


def squared_diff(a, b):
    """Per-frequency squared modulus of the ECF difference, c(t). Shape (k,)."""
    _check_shared_freqs(a, b)
    delta = ad.sub(a.re_im, b.re_im)
    return ad.reduce_sum(ad.square(delta), axis=0)


def alpha_weighted_diff(a, b, alpha):
    """Amplitude/phase reweighted squared difference c_alpha(t). Shape (k,)."""
    _check_shared_freqs(a, b)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")

    sq_a = ad.reduce_sum(ad.square(a.re_im), axis=0)
    sq_b = ad.reduce_sum(ad.square(b.re_im), axis=0)
    mod_a = ad.sqrt_eps(sq_a, MODULUS_GUARD)
    mod_b = ad.sqrt_eps(sq_b, MODULUS_GUARD)

    amplitude = ad.square(ad.sub(mod_a, mod_b))
    # the phase part is the exact remainder of the full squared difference;
    # algebraically 2(|a||b| - (re_a re_b + im_a im_b)), but this form makes
    # amplitude + phase == c bitwise and vanishes exactly for equal inputs
    phase = ad.sub(squared_diff(a, b), amplitude)
    return ad.add(ad.scale(amplitude, alpha), ad.scale(phase, 1.0 - alpha))


def distance_between(a, b, alpha=0.5, eps=SQRT_EPS_DEFAULT):
    """CF distance between two ECF evaluations: mean_j sqrt(c_alpha + eps).

    c_alpha is capped at 4 - eps first, so the stabilized square root never
    pushes the result past the theoretical bound of 2.
    """
    weighted = alpha_weighted_diff(a, b, alpha)
    capped = ad.clip_box(weighted, None, 4.0 - eps)
    return ad.reduce_mean(ad.sqrt_eps(capped, eps))


def cf_distance(x_samples, y_samples, freqs, config=None):
    """CF distance between two sample sets at shared frequencies.

    Returns a scalar Tensor in [0, 2]. Identical sample sets give exactly
    sqrt(eps); the value is symmetric in its sample arguments bit for bit.
    """
    if config is None:
        config = CfLossConfig()
    freqs = ad.as_tensor(freqs)
    a = ecf(x_samples, freqs)
    b = ecf(y_samples, freqs)
    return distance_between(a, b, config.alpha, config.eps)


def amplitude_phase(e):
    """Amplitude and principal phase of an ECF evaluation, as numpy arrays.

    Phase is atan2(im, re) in (-pi, pi]; where the amplitude falls below
    1e-12 the phase is reported as 0 (it is numerically meaningless there).
    """
    amp = e.modulus()
    phase = np.arctan2(e.im, e.re)
    phase = np.where(amp < PHASE_GUARD, 0.0, phase)
    return amp, phase
