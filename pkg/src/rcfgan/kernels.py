"""Backend dispatch for the ECF hot loop.

Two interchangeable implementations of the empirical characteristic function
forward/backward pair:

* ``numpy`` - vectorized fallback, always available.
* ``compiled`` - Cython extension ``rcfgan._ecf_core``, picked automatically
  when the build produced it.

``RCFGAN_BACKEND=numpy`` forces the fallback, ``RCFGAN_BACKEND=compiled``
demands the extension (ImportError if the build skipped it). Anything else,
including unset, means auto.

Contract shared by both backends (all arrays C-contiguous float64):

``ecf_forward(samples[n,m], freqs[k,m]) -> (re[k], im[k], cache)``
    re[j] = mean_i cos(<samples_i, freqs_j>), im[j] likewise with sin.
    cache carries the per-sample cos/sin matrices for backward.

``ecf_backward(samples, freqs, cache, g_re[k], g_im[k], need_gs, need_gf)
-> (g_samples[n,m] | None, g_freqs[k,m] | None)``
    Chain-rule pullback of (g_re, g_im) onto samples and/or frequencies.
"""

import os

import numpy as np


def _numpy_ecf_forward(samples, freqs):
    proj = samples @ freqs.T
    cos_p = np.cos(proj)
    sin_p = np.sin(proj)
    return cos_p.mean(axis=0), sin_p.mean(axis=0), (cos_p, sin_p)


def _numpy_ecf_backward(samples, freqs, cache, g_re, g_im,
                        need_g_samples, need_g_freqs):
    cos_p, sin_p = cache
    n = samples.shape[0]
    g_proj = (g_im[None, :] * cos_p - g_re[None, :] * sin_p) / n
    g_samples = g_proj @ freqs if need_g_samples else None
    g_freqs = g_proj.T @ samples if need_g_freqs else None
    return g_samples, g_freqs


NUMPY_BACKEND = {"ecf_forward": _numpy_ecf_forward,
                 "ecf_backward": _numpy_ecf_backward}


def _load_compiled():
    try:
        from rcfgan import _ecf_core
    except ImportError:
        return None
    return {"ecf_forward": _ecf_core.ecf_forward,
            "ecf_backward": _ecf_core.ecf_backward}


_choice = os.environ.get("RCFGAN_BACKEND", "auto").strip().lower() or "auto"
if _choice == "numpy":
    _active = NUMPY_BACKEND
    BACKEND = "numpy"
elif _choice == "compiled":
    _active = _load_compiled()
    if _active is None:
        raise ImportError(
            "RCFGAN_BACKEND=compiled but the rcfgan._ecf_core extension is "
            "not built; reinstall with a working C toolchain or unset the "
            "variable to use the numpy fallback")
    BACKEND = "compiled"
elif _choice == "auto":
    _active = _load_compiled()
    if _active is None:
        _active = NUMPY_BACKEND
        BACKEND = "numpy"
    else:
        BACKEND = "compiled"
else:
    raise ValueError(f"unknown RCFGAN_BACKEND value {_choice!r}; "
                     "expected numpy, compiled, or auto")

COMPILED_BACKEND = _load_compiled()

ecf_forward = _active["ecf_forward"]
ecf_backward = _active["ecf_backward"]


def available_backends():
    """Names of backends importable right now."""
    names = ["numpy"]
    if COMPILED_BACKEND is not None:
        names.append("compiled")
    return names


def get_backend(name):
    """Fetch a backend dict by name, for benchmarks and parity tests."""
    if name == "numpy":
        return NUMPY_BACKEND
    if name == "compiled":
        if COMPILED_BACKEND is None:
            raise KeyError("compiled backend not built")
        return COMPILED_BACKEND
    raise KeyError(f"unknown backend {name!r}")
