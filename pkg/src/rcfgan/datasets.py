"""Data sources: elliptical families, 2-D mixture benchmarks, IDX images.

Elliptical families come in two routes that must agree: a sampler (used for
training and tests) and a closed-form characteristic function (the oracle the
ECF is checked against). ``sigma`` is the diagonal of the scale matrix in the
CF argument t' Sigma t; what that means per family:

    gaussian    per-coordinate variance, CF factor exp(-sigma_d t_d^2 / 2)
    laplace     CF factor 1 / (1 + sigma_d t_d^2) per coordinate
                (coordinates independent; the multivariate CF is the product)
    student_t   multivariate t with nu dof, CF via the Bessel K form
    cauchy      student_t at nu = 1, CF exp(-sqrt(t' Sigma t))

IDX files follow the classic big-endian layout: images magic 0x00000803 then
count/rows/cols and raw bytes; labels magic 0x00000801 then count and raw
bytes. Pixels map to [-1, 1] via px / 127.5 - 1, and writing a parsed
dataset back out reproduces the original bytes.
"""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from .autodiff import Tensor

FAMILIES = ("gaussian", "laplace", "student_t", "cauchy")

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


# ---------------------------------------------------------------------------
# elliptical families

@dataclass
class EllipticalSpec:
    """One elliptical component: family, mean vector, diagonal scale."""

    family: str
    mu: np.ndarray
    sigma: np.ndarray
    nu: float = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, "
                             f"expected one of {FAMILIES}")
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        self.sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        if self.mu.ndim != 1 or self.sigma.shape != self.mu.shape:
            raise ValueError(f"mu and sigma must be matching vectors, got "
                             f"shapes {self.mu.shape} and {self.sigma.shape}")
        if np.any(self.sigma <= 0.0):
            raise ValueError("sigma entries must be positive")
        if self.family == "student_t":
            if self.nu is None or self.nu <= 0.0:
                raise ValueError("student_t needs nu > 0")

    @property
    def dim(self):
        return self.mu.shape[0]


def sample_elliptical(spec, n, rng):
    """Draw n samples as an (n, dim) tensor."""
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    m = spec.dim
    root_sigma = np.sqrt(spec.sigma)
    if spec.family == "gaussian":
        x = rng.standard_normal((n, m)) * root_sigma
    elif spec.family == "laplace":
        # difference of unit exponentials is standard Laplace, CF 1/(1+t^2)
        x = (rng.exponential(1.0, (n, m)) - rng.exponential(1.0, (n, m)))
        x *= root_sigma
    else:
        nu = 1.0 if spec.family == "cauchy" else float(spec.nu)
        z = rng.standard_normal((n, m))
        w = rng.chisquare(nu, n)
        x = z * np.sqrt(nu / w)[:, None] * root_sigma
    return Tensor(x + spec.mu)


def _student_t_psi(s, nu):
    """CF generator of the multivariate t: psi(s) for s = t' Sigma t."""
    x = np.sqrt(np.maximum(nu * s, 0.0))
    out = np.ones_like(x)
    mask = x > 1e-12
    if np.any(mask):
        xm = x[mask]
        half = nu / 2.0
        out[mask] = (kv(half, xm) * xm ** half
                     / (gamma_fn(half) * 2.0 ** (half - 1.0)))
    return out


def analytic_cf(spec, freqs):
    """Closed-form characteristic function at (k, dim) frequencies.

    Returns a complex (k,) array. This is the oracle route; it shares no
    code with the sampler beyond the spec itself.
    """
    freqs = np.atleast_2d(np.asarray(freqs, dtype=np.float64))
    if freqs.shape[1] != spec.dim:
        raise ValueError(f"frequency dim {freqs.shape[1]} does not match "
                         f"spec dim {spec.dim}")
    shift = np.exp(1j * (freqs @ spec.mu))
    s = (freqs * freqs) @ spec.sigma
    if spec.family == "gaussian":
        psi = np.exp(-0.5 * s)
    elif spec.family == "laplace":
        psi = 1.0 / np.prod(1.0 + spec.sigma[None, :] * freqs ** 2, axis=1)
    elif spec.family == "student_t":
        psi = _student_t_psi(s, float(spec.nu))
    else:  # cauchy
        psi = np.exp(-np.sqrt(s))
    return shift * psi


# ---------------------------------------------------------------------------
# mixtures and the 2-D benchmark presets

@dataclass
class MixtureSpec:
    """Weighted list of elliptical components with a shared dimension."""

    components: list
    name: str = ""

    def __post_init__(self):
        if not self.components:
            raise ValueError("a mixture needs at least one component")
        weights = np.array([w for w, _ in self.components], dtype=np.float64)
        if np.any(weights <= 0.0):
            raise ValueError("mixture weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"mixture weights must sum to 1, got {weights.sum()}")
        dims = {comp.dim for _, comp in self.components}
        if len(dims) != 1:
            raise ValueError(f"components disagree on dimension: {sorted(dims)}")

    @property
    def dim(self):
        return self.components[0][1].dim

    @property
    def num_modes(self):
        return len(self.components)

    def weights(self):
        return np.array([w for w, _ in self.components])

    def mode_means(self):
        return np.stack([comp.mu for _, comp in self.components])

    def mode_stds(self):
        return np.sqrt(np.stack([comp.sigma for _, comp in self.components]))


def sample_mixture(spec, n, rng):
    """Draw n samples from the mixture as an (n, dim) tensor."""
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    idx = rng.choice(spec.num_modes, size=n, p=spec.weights())
    out = np.empty((n, spec.dim))
    for c, (_, comp) in enumerate(spec.components):
        rows = np.nonzero(idx == c)[0]
        if rows.size:
            out[rows] = sample_elliptical(comp, rows.size, rng).data
    return Tensor(out)


def _gaussian_blob(mean, std):
    mean = np.asarray(mean, dtype=np.float64)
    var = np.full(mean.shape, std * std)
    return EllipticalSpec("gaussian", mean, var)


def preset(name):
    """Named 2-D (and one 1-D) mixture benchmarks."""
    if name == "ring8":
        angles = 2.0 * np.pi * np.arange(8) / 8.0
        comps = [(1.0 / 8.0, _gaussian_blob([2.0 * np.cos(a), 2.0 * np.sin(a)],
                                            0.02))
                 for a in angles]
        return MixtureSpec(comps, name="ring8")
    if name == "grid25":
        comps = []
        for gx in range(-2, 3):
            for gy in range(-2, 3):
                comps.append((1.0 / 25.0, _gaussian_blob([float(gx), float(gy)],
                                                         0.05)))
        return MixtureSpec(comps, name="grid25")
    if name == "two_moons":
        comps = []
        thetas = np.linspace(0.0, np.pi, 12)
        for t in thetas:
            comps.append((1.0 / 24.0,
                          _gaussian_blob([np.cos(t), np.sin(t)], 0.05)))
        for t in thetas:
            comps.append((1.0 / 24.0,
                          _gaussian_blob([1.0 - np.cos(t), 0.5 - np.sin(t)],
                                         0.05)))
        return MixtureSpec(comps, name="two_moons")
    if name == "bimodal1d":
        comps = [(0.5, _gaussian_blob([-1.0], 0.1)),
                 (0.5, _gaussian_blob([1.0], 0.1))]
        return MixtureSpec(comps, name="bimodal1d")
    raise KeyError(f"unknown preset {name!r}; expected ring8, grid25, "
                   "two_moons, or bimodal1d")


PRESET_NAMES = ("ring8", "grid25", "two_moons", "bimodal1d")


# ---------------------------------------------------------------------------
# batch streams for the trainer

class MixtureStream:
    """Fresh mixture draws every batch."""

    def __init__(self, spec):
        self.spec = spec

    @property
    def dim(self):
        return self.spec.dim

    def next_batch(self, batch, rng):
        return sample_mixture(self.spec, batch, rng).data


class ArrayStream:
    """Cycles a fixed (n, d) array in shuffled epochs."""

    def __init__(self, array):
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] == 0:
            raise ValueError(f"ArrayStream needs a nonempty (n, d) array, "
                             f"got shape {array.shape}")
        self.array = array
        self._order = None
        self._cursor = 0

    @property
    def dim(self):
        return self.array.shape[1]

    def next_batch(self, batch, rng):
        n = self.array.shape[0]
        out = np.empty((batch, self.array.shape[1]))
        filled = 0
        while filled < batch:
            if self._order is None or self._cursor >= n:
                self._order = rng.permutation(n)
                self._cursor = 0
            take = min(batch - filled, n - self._cursor)
            rows = self._order[self._cursor:self._cursor + take]
            out[filled:filled + take] = self.array[rows]
            self._cursor += take
            filled += take
        return out


# ---------------------------------------------------------------------------
# IDX image files

class IdxFormatError(ValueError):
    """Malformed IDX file."""


@dataclass
class IdxDataset:
    """Images scaled to [-1, 1] plus labels and provenance checksum."""

    images: np.ndarray   # (n, rows * cols) float64 in [-1, 1]
    labels: np.ndarray   # (n,) uint8
    rows: int
    cols: int
    checksum: str        # sha256 over the serialized IDX byte streams

    @property
    def count(self):
        return self.images.shape[0]


def _serialize_idx(pixels, labels):
    """Raw IDX byte streams for (n, rows, cols) uint8 pixels and labels."""
    n, rows, cols = pixels.shape
    image_bytes = struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols)
    image_bytes += pixels.tobytes()
    label_bytes = struct.pack(">II", IDX_LABELS_MAGIC, n) + labels.tobytes()
    return image_bytes, label_bytes


def _dataset_from_bytes(image_bytes, label_bytes, source=""):
    where = source or "IDX data"
    if len(image_bytes) < 16:
        raise IdxFormatError(f"{where}: image header truncated "
                             f"({len(image_bytes)} bytes)")
    magic, n, rows, cols = struct.unpack_from(">IIII", image_bytes, 0)
    if magic != IDX_IMAGES_MAGIC:
        raise IdxFormatError(f"{where}: bad image magic 0x{magic:08x}, "
                             f"expected 0x{IDX_IMAGES_MAGIC:08x}")
    expected = 16 + n * rows * cols
    if len(image_bytes) != expected:
        raise IdxFormatError(f"{where}: image payload is {len(image_bytes)} "
                             f"bytes, header implies {expected}")
    if len(label_bytes) < 8:
        raise IdxFormatError(f"{where}: label header truncated "
                             f"({len(label_bytes)} bytes)")
    lmagic, ln = struct.unpack_from(">II", label_bytes, 0)
    if lmagic != IDX_LABELS_MAGIC:
        raise IdxFormatError(f"{where}: bad label magic 0x{lmagic:08x}, "
                             f"expected 0x{IDX_LABELS_MAGIC:08x}")
    if len(label_bytes) != 8 + ln:
        raise IdxFormatError(f"{where}: label payload is {len(label_bytes)} "
                             f"bytes, header implies {8 + ln}")
    if ln != n:
        raise IdxFormatError(f"{where}: {n} images but {ln} labels")
    pixels = np.frombuffer(image_bytes, dtype=np.uint8, offset=16)
    images = pixels.astype(np.float64) / 127.5 - 1.0
    labels = np.frombuffer(label_bytes, dtype=np.uint8, offset=8).copy()
    digest = hashlib.sha256(image_bytes + label_bytes).hexdigest()
    return IdxDataset(images=images.reshape(n, rows * cols), labels=labels,
                      rows=rows, cols=cols, checksum=digest)


def load_idx(images_path, labels_path):
    """Parse an IDX image/label file pair."""
    with open(images_path, "rb") as fh:
        image_bytes = fh.read()
    with open(labels_path, "rb") as fh:
        label_bytes = fh.read()
    return _dataset_from_bytes(image_bytes, label_bytes,
                               source=str(images_path))


def dataset_pixel_bytes(ds):
    """Recover the original uint8 pixels from the scaled images."""
    pixels = np.round((ds.images + 1.0) * 127.5)
    return np.clip(pixels, 0, 255).astype(np.uint8).reshape(
        ds.count, ds.rows, ds.cols)


def write_idx(ds, images_path, labels_path):
    """Serialize a dataset back to IDX files (inverse of load_idx)."""
    image_bytes, label_bytes = _serialize_idx(dataset_pixel_bytes(ds),
                                              ds.labels.astype(np.uint8))
    with open(images_path, "wb") as fh:
        fh.write(image_bytes)
    with open(labels_path, "wb") as fh:
        fh.write(label_bytes)


def filter_digits(ds, digits):
    """Subset of a dataset containing only the requested label values."""
    digits = list(digits)
    mask = np.isin(ds.labels, digits)
    if not np.any(mask):
        raise ValueError(f"no samples with labels {digits}")
    return IdxDataset(images=ds.images[mask], labels=ds.labels[mask],
                      rows=ds.rows, cols=ds.cols, checksum=ds.checksum)


# ---------------------------------------------------------------------------
# synthetic digits (seven-segment renders through the real IDX byte path)

_SEGMENTS = {
    "A": ((5, 8), (5, 19)),
    "B": ((5, 19), (14, 19)),
    "C": ((14, 19), (23, 19)),
    "D": ((23, 8), (23, 19)),
    "E": ((14, 8), (23, 8)),
    "F": ((5, 8), (14, 8)),
    "G": ((14, 8), (14, 19)),
}

_DIGIT_SEGMENTS = {
    0: "ABCDEF", 1: "BC", 2: "ABGED", 3: "ABGCD", 4: "FGBC",
    5: "AFGCD", 6: "AFGECD", 7: "ABC", 8: "ABCDEFG", 9: "ABCDFG",
}


def _raster_segment(canvas, p1, p2, shift, brightness):
    rows, cols = np.mgrid[0:28, 0:28]
    a = np.array(p1, dtype=np.float64) + shift
    b = np.array(p2, dtype=np.float64) + shift
    ab = b - a
    denom = max(float(ab @ ab), 1e-12)
    pr = rows - a[0]
    pc = cols - a[1]
    t = np.clip((pr * ab[0] + pc * ab[1]) / denom, 0.0, 1.0)
    dr = pr - t * ab[0]
    dc = pc - t * ab[1]
    dist = np.sqrt(dr * dr + dc * dc)
    intensity = np.clip(1.6 - dist, 0.0, 1.0) * brightness
    np.maximum(canvas, intensity, out=canvas)


def render_digit(digit, rng):
    """One 28x28 uint8 render of a digit with jitter and pixel noise."""
    if digit not in _DIGIT_SEGMENTS:
        raise ValueError(f"no template for digit {digit}")
    canvas = np.zeros((28, 28))
    shift = rng.integers(-2, 3, size=2).astype(np.float64)
    brightness = rng.uniform(0.75, 1.0)
    for seg in _DIGIT_SEGMENTS[digit]:
        p1, p2 = _SEGMENTS[seg]
        _raster_segment(canvas, p1, p2, shift, brightness)
    pixels = canvas * 255.0 + rng.uniform(0.0, 20.0, size=(28, 28))
    return np.clip(np.round(pixels), 0, 255).astype(np.uint8)


def synthetic_digits(digits, per_class, rng):
    """A dataset of rendered digits, serialized through the IDX byte path."""
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    pixels = []
    labels = []
    for digit in digits:
        for _ in range(per_class):
            pixels.append(render_digit(digit, rng))
            labels.append(digit)
    order = rng.permutation(len(labels))
    stack = np.stack(pixels)[order]
    labels = np.array(labels, dtype=np.uint8)[order]
    image_bytes, label_bytes = _serialize_idx(stack, labels)
    return _dataset_from_bytes(image_bytes, label_bytes, source="synthetic")
