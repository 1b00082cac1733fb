"""Evaluation and validation tooling.

Everything here sits outside the training graph: mode coverage for the 2-D
benchmarks, a permutation two-sample test on the CF distance, the
amplitude/phase swap experiment, the alpha sweep, metric-axiom validation
suites, finite-difference gradient checking, and a dependency-free PNG
scatter writer.
"""

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import datasets
from .autodiff import Tensor
from .ecf import MODULUS_GUARD, CfLossConfig, cf_distance, ecf
from .nets import Mlp, MlpSpec
from .optim import Adam


def _as_array(samples):
    if isinstance(samples, Tensor):
        return samples.data
    return np.asarray(samples, dtype=np.float64)


# ---------------------------------------------------------------------------
# mode coverage

@dataclass
class ModeReport:
    total_modes: int
    modes_covered: int
    high_quality_fraction: float
    per_mode_counts: list
    min_count: int


def mode_coverage(samples, spec):
    """Count recovered mixture modes among generated samples.

    Each sample is assigned to its nearest mode mean (Euclidean) and counts
    as high quality when it sits within 3 standard deviations of that mean in
    every coordinate. A mode is covered when it attracts at least
    max(5, n / (10 * num_modes)) high-quality samples.
    """
    x = _as_array(samples)
    if x.ndim != 2:
        raise ValueError(f"mode_coverage needs (n, d) samples, got {x.shape}")
    means = spec.mode_means()
    stds = spec.mode_stds()
    if x.shape[1] != means.shape[1]:
        raise ValueError(f"samples have dim {x.shape[1]}, mixture has "
                         f"dim {means.shape[1]}")
    n = x.shape[0]
    if n == 0:
        raise ValueError("mode_coverage needs at least one sample")

    d2 = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    nearest = d2.argmin(axis=1)
    inside = np.all(np.abs(x - means[nearest]) <= 3.0 * stds[nearest], axis=1)

    num_modes = means.shape[0]
    counts = np.bincount(nearest[inside], minlength=num_modes)
    min_count = max(5, n // (10 * num_modes))
    covered = int((counts >= min_count).sum())
    return ModeReport(total_modes=num_modes, modes_covered=covered,
                      high_quality_fraction=float(inside.mean()),
                      per_mode_counts=counts.tolist(), min_count=min_count)


# ---------------------------------------------------------------------------
# numpy twin of the CF statistic (fast path for permutations)

def _cf_stat(re_a, im_a, re_b, im_b, alpha, eps):
    mod_a = np.sqrt(re_a * re_a + im_a * im_a + MODULUS_GUARD)
    mod_b = np.sqrt(re_b * re_b + im_b * im_b + MODULUS_GUARD)
    amplitude = (mod_a - mod_b) ** 2
    full = (re_a - re_b) ** 2 + (im_a - im_b) ** 2
    phase = full - amplitude
    weighted = alpha * amplitude + (1.0 - alpha) * phase
    weighted = np.minimum(weighted, 4.0 - eps)
    return float(np.mean(np.sqrt(weighted + eps)))


@dataclass
class TwoSampleResult:
    p_value: float
    observed: float
    num_perms: int
    reject: bool


def permutation_test(a, b, freqs, alpha=0.5, eps=1e-12, num_perms=200,
                     level=0.05, rng=None):
    """Permutation two-sample test with the CF distance as the statistic.

    The pooled cos/sin projections are computed once; every permutation
    statistic is then a pair of row-subset means, so the test stays cheap
    even for hundreds of permutations. p uses the add-one rule
    (1 + #{perm >= observed}) / (1 + num_perms).
    """
    a = _as_array(a)
    b = _as_array(b)
    freqs = _as_array(freqs)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"two-sample inputs must share feature dim, got "
                         f"{a.shape} and {b.shape}")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("each group needs at least 2 samples")
    if num_perms < 100:
        raise ValueError(f"num_perms must be >= 100, got {num_perms}")
    rng = rng if rng is not None else np.random.default_rng(0)

    pooled = np.concatenate([a, b], axis=0)
    proj = pooled @ freqs.T
    cos_p = np.cos(proj)
    sin_p = np.sin(proj)
    na, ntot = a.shape[0], pooled.shape[0]

    def stat(idx_a, idx_b):
        return _cf_stat(cos_p[idx_a].mean(axis=0), sin_p[idx_a].mean(axis=0),
                        cos_p[idx_b].mean(axis=0), sin_p[idx_b].mean(axis=0),
                        alpha, eps)

    base = np.arange(ntot)
    observed = stat(base[:na], base[na:])
    hits = 0
    for _ in range(num_perms):
        perm = rng.permutation(ntot)
        if stat(perm[:na], perm[na:]) >= observed:
            hits += 1
    p_value = (1.0 + hits) / (1.0 + num_perms)
    return TwoSampleResult(p_value=p_value, observed=observed,
                           num_perms=num_perms, reject=p_value <= level)


def null_rejection_rate(trials=100, n=256, dim=1, num_perms=200, k=16,
                        level=0.05, shift=0.0, seed=0):
    """Rejection frequency over repeated tests; shift=0 probes the null."""
    rng = np.random.default_rng(seed)
    rejections = 0
    p_values = []
    for _ in range(trials):
        a = rng.standard_normal((n, dim))
        b = rng.standard_normal((n, dim)) + shift
        freqs = rng.standard_normal((k, dim))
        result = permutation_test(a, b, freqs, num_perms=num_perms,
                                  level=level, rng=rng)
        rejections += int(result.reject)
        p_values.append(result.p_value)
    return rejections / trials, np.array(p_values)


# ---------------------------------------------------------------------------
# amplitude/phase swap experiment

@dataclass
class SwapResult:
    """Four sample grids from swapped Gaussian fits.

    For a Gaussian, the CF amplitude depends only on the covariance and the
    CF phase only on the mean, so swapping amplitude and phase between two
    fitted classes is exactly swapping their variances and means. Keys name
    (phase donor, amplitude donor).
    """
    samples: dict          # {"aa": (n,d), "ab": ..., "ba": ..., "bb": ...}
    mean_a: np.ndarray
    mean_b: np.ndarray
    var_a: np.ndarray
    var_b: np.ndarray


def swap_experiment(set_a, set_b, n_out=64, rng=None):
    """Fit diagonal Gaussians to two sample sets and sample all four
    phase/amplitude pairings."""
    a = _as_array(set_a)
    b = _as_array(set_b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"swap needs two (n, d) sets of equal d, got "
                         f"{a.shape} and {b.shape}")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("each set needs at least 2 samples to fit variance")
    if n_out < 1:
        raise ValueError(f"n_out must be >= 1, got {n_out}")
    rng = rng if rng is not None else np.random.default_rng(0)

    # variances are floored so degenerate (constant) coordinates still
    # produce a valid Gaussian fit
    mean_a, var_a = a.mean(axis=0), np.maximum(a.var(axis=0), 1e-6)
    mean_b, var_b = b.mean(axis=0), np.maximum(b.var(axis=0), 1e-6)

    def draw(mean, var):
        return mean + rng.standard_normal((n_out, a.shape[1])) * np.sqrt(var)

    samples = {
        "aa": draw(mean_a, var_a),   # phase a, amplitude a
        "ab": draw(mean_a, var_b),   # phase a, amplitude b
        "ba": draw(mean_b, var_a),   # phase b, amplitude a
        "bb": draw(mean_b, var_b),   # phase b, amplitude b
    }
    return SwapResult(samples=samples, mean_a=mean_a, mean_b=mean_b,
                      var_a=var_a, var_b=var_b)


def nearest_mean_fraction(samples, mean_a, mean_b):
    """Fraction of rows closer to mean_a than to mean_b (Euclidean)."""
    x = _as_array(samples)
    da = ((x - mean_a) ** 2).sum(axis=1)
    db = ((x - mean_b) ** 2).sum(axis=1)
    return float((da < db).mean())


# ---------------------------------------------------------------------------
# alpha sweep (critic-free CF fit on the 1-D bimodal target)

@dataclass
class AlphaSweepRow:
    alpha: float
    spread: float
    final_loss: float
    diverged: bool


def alpha_sweep(alphas, iterations=400, seed=0, batch=64, num_freqs=64,
                freq_variance=0.25, lr=0.02, sample_count=4096):
    """Train a small generator directly on the CF loss per alpha.

    No critic: the loss compares generated 1-D samples against bimodal data
    in sample space, and the updates are plain gradient descent. SGD on
    purpose: the sweep measures how the loss surface changes with alpha,
    and an adaptive optimizer would normalize away exactly that difference
    (scaling a loss term does not change Adam's steps).

    The returned spread is the RMS of generated values around the mixture
    mean (0). The frequency window is narrow enough that a symmetric
    target's CF has no sign changes inside it, so the phase term supplies
    almost no dispersion gradient: phase-weighted runs stay narrow,
    amplitude-weighted runs spread out to match the target modulus, and
    mixed runs land in between.
    """
    spec = datasets.preset("bimodal1d")
    rows = []
    for alpha in alphas:
        cfg = CfLossConfig(alpha=float(alpha), num_freqs=num_freqs)
        rng = np.random.default_rng(seed)
        gen = Mlp(MlpSpec([2, 32, 32, 1], hidden_activation="relu",
                          output_activation="identity", init_seed=seed))
        params = gen.parameters()
        final_loss = float("nan")
        diverged = False
        for _ in range(iterations):
            z = Tensor(rng.standard_normal((batch, 2)))
            data = datasets.sample_mixture(spec, batch, rng)
            freqs = Tensor(rng.normal(0.0, np.sqrt(freq_variance),
                                      size=(num_freqs, 1)))
            for p in params:
                p.grad = None
            loss = cf_distance(gen.forward(z), data, freqs, cfg)
            final_loss = loss.item()
            if not np.isfinite(final_loss):
                diverged = True
                break
            ad.backward(loss)
            for p in params:
                if p.grad is not None:
                    p.data = p.data - lr * p.grad
        if diverged:
            rows.append(AlphaSweepRow(float(alpha), float("nan"),
                                      final_loss, True))
            continue
        z = Tensor(rng.standard_normal((sample_count, 2)))
        out = gen.forward(z).data[:, 0]
        spread = float(np.sqrt(np.mean(out ** 2)))
        rows.append(AlphaSweepRow(float(alpha), spread, final_loss, False))
    return rows


# ---------------------------------------------------------------------------
# finite-difference gradient checking

def numerical_gradient(value_fn, arrays, index, h=1e-5):
    """Central-difference gradient of value_fn(*arrays) w.r.t. one array."""
    base = [np.array(a, dtype=np.float64) for a in arrays]
    target = base[index]
    grad = np.zeros_like(target)
    flat = target.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = value_fn(*base)
        flat[i] = keep - h
        down = value_fn(*base)
        flat[i] = keep
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def gradient_check(build_fn, arrays, h=1e-5, floor=1e-3):
    """Max relative error between reverse-mode and numeric gradients.

    build_fn maps Tensors to a scalar Tensor. The relative error uses an
    absolute floor so near-zero gradients do not blow up the ratio.
    """
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    out = build_fn(*tensors)
    ad.backward(out)

    def value_fn(*plain):
        return build_fn(*[Tensor(p) for p in plain]).item()

    worst = 0.0
    for i, t in enumerate(tensors):
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        numeric = numerical_gradient(value_fn, arrays, i, h=h)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)),
                           floor)
        worst = max(worst, float(np.max(np.abs(analytic - numeric) / denom)))
    return worst


def gradient_check_suite(seed=0):
    """(name, max relative error, tolerance) per op plus end to end."""
    rng = np.random.default_rng(seed)

    def box(*shape):
        return rng.uniform(-2.0, 2.0, size=shape)

    def away_from_kink(*shape):
        x = box(*shape)
        x[np.abs(x) < 1e-3] = 0.5
        return x

    checks = []

    def run(name, build_fn, arrays, tol=1e-5):
        checks.append((name, gradient_check(build_fn, arrays), tol))

    run("matmul", lambda a, b: ad.reduce_sum(ad.matmul(a, b)),
        [box(3, 4), box(4, 2)])
    run("add", lambda a, b: ad.reduce_sum(ad.add(a, b)), [box(5), box(5)])
    run("sub_scalar", lambda a, b: ad.reduce_sum(ad.sub(a, b)),
        [box(4, 3), box(1)])
    run("mul", lambda a, b: ad.reduce_sum(ad.mul(a, b)),
        [box(3, 3), box(3, 3)])
    run("neg", lambda a: ad.reduce_sum(ad.neg(a)), [box(6)])
    run("scale", lambda a: ad.reduce_sum(ad.scale(a, -1.7)), [box(4)])
    run("bias_add", lambda m, v: ad.reduce_sum(ad.bias_add(m, v)),
        [box(4, 3), box(3)])
    run("tanh", lambda a: ad.reduce_sum(ad.tanh(a)), [box(8)])
    run("sigmoid", lambda a: ad.reduce_sum(ad.sigmoid(a)), [box(8)])
    run("relu", lambda a: ad.reduce_sum(ad.relu(a)), [away_from_kink(8)])
    run("softplus", lambda a: ad.reduce_sum(ad.softplus(a)), [box(8)])
    run("cos", lambda a: ad.reduce_sum(ad.cos(a)), [box(8)])
    run("sin", lambda a: ad.reduce_sum(ad.sin(a)), [box(8)])
    run("square", lambda a: ad.reduce_sum(ad.square(a)), [box(8)])
    run("sqrt_eps", lambda a: ad.reduce_sum(ad.sqrt_eps(ad.square(a))),
        [away_from_kink(8)])
    run("clip_box", lambda a: ad.reduce_sum(ad.clip_box(a, -1.5, 1.5)),
        [away_from_kink(8) * 0.5])
    run("reduce_mean_axis",
        lambda a: ad.reduce_sum(ad.square(ad.reduce_mean(a, axis=0))),
        [box(5, 3)])
    run("ecf_pair",
        lambda x, t: ad.reduce_sum(ad.square(ad.ecf_pair(x, t))),
        [box(6, 2), box(4, 2)])

    cfg = CfLossConfig(alpha=0.3, num_freqs=5)

    def end_to_end(x, y, t):
        return cf_distance(x, y, t, cfg)

    checks.append(("cf_distance_end_to_end",
                   gradient_check(end_to_end, [box(8, 2), box(7, 2),
                                               box(5, 2)]),
                   1e-4))
    return checks


# ---------------------------------------------------------------------------
# metric validation suites

@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


def _default_distance(alpha=0.5):
    cfg_cache = {}

    def dist(x, y, freqs):
        k = freqs.shape[0]
        if k not in cfg_cache:
            cfg_cache[k] = CfLossConfig(alpha=alpha, num_freqs=k)
        return cf_distance(Tensor(x), Tensor(y), Tensor(freqs),
                           cfg_cache[k]).item()

    return dist


def _random_cloud(rng, n=512, dim=2):
    mean = rng.uniform(-2.0, 2.0, size=dim)
    scales = rng.uniform(0.2, 1.5, size=dim)
    return mean + rng.standard_normal((n, dim)) * scales


def metric_suites(seed=0, distance_fn=None, triples=500, quick=False):
    """Run the metric validation battery; returns a list of SuiteResult.

    distance_fn(x, y, freqs) -> float defaults to the CF distance at
    alpha = 0.5; passing a broken one (the CLI's --inject-fault does) must
    flip at least one suite to failed, which is the harness self-test.
    """
    dist = distance_fn if distance_fn is not None else _default_distance()
    rng = np.random.default_rng(seed)
    if quick:
        triples = min(triples, 60)
    results = []
    max_seen = 0.0

    # axioms over random triples
    sym_bad = nonneg_bad = tri_bad = 0
    worst_tri = 0.0
    for _ in range(triples):
        freqs = rng.standard_normal((16, 2))
        a, b, c = (_random_cloud(rng) for _ in range(3))
        dab, dba = dist(a, b, freqs), dist(b, a, freqs)
        dac, dbc = dist(a, c, freqs), dist(b, c, freqs)
        if dab != dba:
            sym_bad += 1
        for v in (dab, dac, dbc):
            if v < 0.0:
                nonneg_bad += 1
            max_seen = max(max_seen, v)
        slack = dac - (dab + dbc)
        worst_tri = max(worst_tri, slack)
        if slack > 1e-9:
            tri_bad += 1
    results.append(SuiteResult("symmetry", sym_bad == 0,
                               f"{sym_bad}/{triples} asymmetric pairs"))
    results.append(SuiteResult("nonnegativity", nonneg_bad == 0,
                               f"{nonneg_bad} negative distances"))
    results.append(SuiteResult("triangle", tri_bad == 0,
                               f"worst slack {worst_tri:.3e} over "
                               f"{triples} triples"))

    # identity of indiscernibles, both directions
    same = _random_cloud(rng)
    freqs = rng.standard_normal((16, 2))
    d_same = dist(same, same.copy(), freqs)
    floor = np.sqrt(1e-12)
    point_ok = True
    detail_parts = [f"d(A,A)={d_same:.3e}"]
    for delta in (0.5, 1.0, 2.0):
        x = np.zeros((64, 1))
        y = np.full((64, 1), delta)
        near_zero = rng.normal(0.0, 0.5, size=(32, 1))
        d = dist(x, y, near_zero)
        max_seen = max(max_seen, d)
        detail_parts.append(f"d(0,{delta})={d:.3e}")
        if d < delta / 20.0:
            point_ok = False
    identity_ok = d_same <= floor * (1.0 + 1e-9) and point_ok
    results.append(SuiteResult("identity", identity_ok,
                               ", ".join(detail_parts)))

    # boundedness, including adversarially separated point masses
    for alpha in (0.0, 0.5, 1.0):
        adv = _default_distance(alpha) if distance_fn is None else dist
        x = np.zeros((8, 1))
        y = np.full((8, 1), np.pi)
        d = adv(x, y, np.ones((4, 1)))
        max_seen = max(max_seen, d)
    results.append(SuiteResult("boundedness", 0.0 <= max_seen <= 2.0,
                               f"max distance seen {max_seen:.6f}"))

    # ECF convergence rate ~ n^{-1/2} against the analytic Gaussian CF
    spec = datasets.EllipticalSpec("gaussian", np.array([0.3]),
                                   np.array([0.8]))
    grid = np.linspace(-3.0, 3.0, 9).reshape(-1, 1)
    truth = datasets.analytic_cf(spec, grid)
    sizes = (100, 1000, 10000) if quick else (100, 1000, 10000, 100000)
    reps = 10 if quick else 30
    errs = []
    for n in sizes:
        acc = 0.0
        for _ in range(reps):
            draw = datasets.sample_elliptical(spec, n, rng)
            e = ecf(draw, Tensor(grid))
            emp = e.re + 1j * e.im
            acc += np.sqrt(np.mean(np.abs(emp - truth) ** 2))
        errs.append(acc / reps)
    slope = np.polyfit(np.log(np.array(sizes, dtype=np.float64)),
                       np.log(np.array(errs)), 1)[0]
    results.append(SuiteResult("convergence", -0.65 <= slope <= -0.35,
                               f"log-log slope {slope:.3f}, "
                               f"errors {['%.4f' % e for e in errs]}"))

    # point-mass extrema: distance peaks where c(t) peaks, vanishes at t=0
    x = np.zeros((32, 1))
    y = np.ones((32, 1))
    # 100 candidate frequencies spanning one full period of c(t), t=0 included
    grid = np.linspace(0.0, 2.0 * np.pi, 100)
    per_freq = np.array([dist(x, y, np.array([[t]])) for t in grid])
    c_vals = 2.0 - 2.0 * np.cos(grid)  # exact c(t) for these point masses
    at_c_peak = per_freq[int(np.argmax(c_vals))]
    zero_idx = int(np.argmin(np.abs(grid)))
    peak_ok = at_c_peak >= per_freq.max() - 1e-12
    zero_ok = (per_freq[zero_idx] <= floor * (1.0 + 1e-9)
               and per_freq[zero_idx] <= per_freq.min() + 1e-12)
    max_seen = max(max_seen, float(per_freq.max()))
    results.append(SuiteResult("pointmass_extrema", peak_ok and zero_ok,
                               f"peak {per_freq.max():.4f} at c-argmax "
                               f"{peak_ok}, d(t=0)={per_freq[zero_idx]:.2e}"))

    # amplitude/phase decomposition identities
    pairs = 1000 if quick else 10000
    worst_sum, worst_half = decomposition_residuals(num_pairs=pairs,
                                                    seed=seed)
    results.append(SuiteResult("decomposition",
                               worst_sum <= 1e-12 and worst_half <= 1e-12,
                               f"|c-(c1+c0)| max {worst_sum:.2e}, "
                               f"|c_half-c/2| max {worst_half:.2e}"))

    # sampler vs closed-form CF for every elliptical family; the tolerance
    # is the universal ECF concentration envelope 2 * (3 / sqrt(n))
    fam_details = []
    fam_ok = True
    n_fam = 10000 if quick else 100000
    fam_tol = 2.0 * (3.0 / np.sqrt(n_fam))
    fam_grid = np.array([-2.0, -1.0, 0.5, 1.0, 2.0]).reshape(-1, 1)
    for family, nu in (("gaussian", None), ("laplace", None),
                       ("student_t", 5.0), ("cauchy", None)):
        fspec = datasets.EllipticalSpec(family, np.array([0.3]),
                                        np.array([0.8]), nu=nu)
        truth = datasets.analytic_cf(fspec, fam_grid)
        draw = datasets.sample_elliptical(fspec, n_fam, rng)
        e = ecf(draw, Tensor(fam_grid))
        err = float(np.max(np.abs((e.re + 1j * e.im) - truth)))
        fam_details.append(f"{family}={err:.4f}")
        if err > fam_tol:
            fam_ok = False
    results.append(SuiteResult("analytic_families", fam_ok,
                               ", ".join(fam_details)
                               + f" (tol {fam_tol:.4f})"))
    return results


def decomposition_residuals(num_pairs=10000, seed=0):
    """Max residuals of the amplitude/phase split on random ECF pairs.

    Returns (max |c - (c_1 + c_0)|, max |c_0.5 - c/2|). Random moduli in
    [0, 1] and phases in (-pi, pi] stand in for arbitrary ECF values.
    """
    from .ecf import EcfEval, alpha_weighted_diff, squared_diff

    rng = np.random.default_rng(seed)
    k = 64
    worst_sum = worst_half = 0.0
    for _ in range(num_pairs // k):
        def random_eval():
            mod = rng.uniform(0.0, 1.0, size=k)
            ang = rng.uniform(-np.pi, np.pi, size=k)
            re_im = np.stack([mod * np.cos(ang), mod * np.sin(ang)])
            return re_im

        freqs = Tensor(rng.standard_normal((k, 2)))
        a = EcfEval(Tensor(random_eval()), freqs)
        b = EcfEval(Tensor(random_eval()), freqs)
        c = squared_diff(a, b).data
        c_amp = alpha_weighted_diff(a, b, 1.0).data
        c_phase = alpha_weighted_diff(a, b, 0.0).data
        c_half = alpha_weighted_diff(a, b, 0.5).data
        worst_sum = max(worst_sum, float(np.max(np.abs(c - (c_amp + c_phase)))))
        worst_half = max(worst_half, float(np.max(np.abs(c_half - 0.5 * c))))
    return worst_sum, worst_half


# ---------------------------------------------------------------------------
# PNG scatter output (no external imaging dependency)

def write_png(path, rgb):
    """Write an (H, W, 3) uint8 array as a PNG file."""
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"write_png needs (H, W, 3), got {rgb.shape}")
    height, width = rgb.shape[:2]
    raw = b"".join(b"\x00" + rgb[r].tobytes() for r in range(height))

    def chunk(tag, payload):
        body = tag + payload
        return (struct.pack(">I", len(payload)) + body
                + struct.pack(">I", zlib.crc32(body) & 0xffffffff))

    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    blob = (b"\x89PNG\r\n\x1a\n"
            + chunk(b"IHDR", header)
            + chunk(b"IDAT", zlib.compress(raw, 9))
            + chunk(b"IEND", b""))
    with open(path, "wb") as fh:
        fh.write(blob)


_PALETTE = ((31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
            (148, 103, 189), (140, 86, 75))


def scatter_png(path, point_sets, size=512, margin=0.05):
    """Scatter one or more (n, 2) point sets into a square PNG."""
    sets = [_as_array(p) for p in point_sets]
    allpts = np.concatenate(sets, axis=0)
    lo = allpts.min(axis=0)
    hi = allpts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    lo = lo - margin * span
    hi = hi + margin * span
    span = hi - lo

    canvas = np.full((size, size, 3), 255, dtype=np.uint8)
    for color_idx, pts in enumerate(sets):
        color = _PALETTE[color_idx % len(_PALETTE)]
        unit = (pts - lo) / span
        cols = np.clip((unit[:, 0] * (size - 1)).astype(int), 0, size - 1)
        rows = np.clip(((1.0 - unit[:, 1]) * (size - 1)).astype(int), 0,
                       size - 1)
        for dr in (0, 1):
            for dc in (0, 1):
                rr = np.clip(rows + dr, 0, size - 1)
                cc = np.clip(cols + dc, 0, size - 1)
                canvas[rr, cc] = color
    write_png(path, canvas)
