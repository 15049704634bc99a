"""Independent brute-force validators and synthetic ground-truth scenes.

Everything here exists to check the solver from the outside: an
exhaustive-search oracle for the per-pixel primal update, a projected
subgradient descent that minimizes the same energy by a completely
different route (with its own hand-rolled transform kernels), synthetic
scenes with known reflectance/illumination/labels, and a permutation-
invariant segmentation accuracy.

All randomness is numpy's PCG64 (``np.random.default_rng(seed)``), so
fixtures are reproducible from their seeds.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit
from scipy.optimize import linear_sum_assignment

from . import image_io, ops
from .segment import LabelMap, Thresholds

# The filter bank, restated here so the descent oracle does not lean on
# the transform implementation it is meant to cross-check.
_SQ2 = np.sqrt(2.0)
_FILTERS = np.array(
    [
        [0.25, 0.5, 0.25],
        [_SQ2 / 4.0, 0.0, -_SQ2 / 4.0],
        [-0.25, 0.5, -0.25],
    ]
)


class GridBracketError(RuntimeError):
    """Raised when the search grid fails to bracket the true minimizer."""


@dataclass(frozen=True)
class GridSpec:
    """Search box and resolution for the per-pixel oracle."""

    r_max: float = 10.0
    l_max: float = 10.0
    step: float = 1e-3


def _pixel_objective(r, l, a, b, c, s, r_n, l_n, gamma, mu, sigma):
    return (
        0.5 * gamma * (l - s - r) ** 2
        + 0.5 * mu * l**2
        + (a + b) * r
        + c * l
        + (r - r_n) ** 2 / (2.0 * sigma)
        + (l - l_n) ** 2 / (2.0 * sigma)
    )


def pixel_qp_oracle(a, b, c, s, r_n, l_n, gamma, mu, sigma, grid=GridSpec()):
    """Exhaustive-search minimizer of the per-pixel primal subproblem.

    Scans a coarse grid over [0, r_max] x [-l_max, l_max], then a fine
    grid at the requested step inside a window sized from the objective's
    condition number (the objective is strictly convex, so its continuous
    minimizer lies within sqrt(cond) grid cells of any grid argmin), and
    finishes with one Newton step restricted to the detected active set.

    Returns (r, l, objective value).  Active-constraint cases return
    r = 0 exactly.
    """

    def objective(r, l):
        return _pixel_objective(r, l, a, b, c, s, r_n, l_n, gamma, mu, sigma)

    # Hessian of the objective and its condition number (exact, 2x2).
    a11 = gamma + 1.0 / sigma
    a22 = gamma + mu + 1.0 / sigma
    hess = np.array([[a11, -gamma], [-gamma, a22]])
    eigs = np.linalg.eigvalsh(hess)
    cond = eigs[1] / eigs[0]
    drift = np.sqrt(cond) + 2.0

    def scan(r_lo, r_hi, l_lo, l_hi, step):
        r_vals = np.arange(max(r_lo, 0.0), r_hi + step, step)
        l_vals = np.arange(l_lo, l_hi + step, step)
        values = objective(r_vals[:, None], l_vals[None, :])
        flat = int(np.argmin(values))
        i, j = divmod(flat, l_vals.size)
        return float(r_vals[i]), float(l_vals[j])

    coarse = max(grid.step, 0.05)
    r0, l0 = scan(0.0, grid.r_max, -grid.l_max, grid.l_max, coarse)
    w = coarse * drift
    r1, l1 = scan(r0 - w, r0 + w, l0 - w, l0 + w, grid.step)

    # Newton polish.  Gradient of the objective:
    #   dE/dr = -gamma (l - s - r) + a + b + (r - r_n) / sigma
    #   dE/dl =  gamma (l - s - r) + mu l + c + (l - l_n) / sigma
    g = np.array(
        [
            -gamma * (l1 - s - r1) + a + b + (r1 - r_n) / sigma,
            gamma * (l1 - s - r1) + mu * l1 + c + (l1 - l_n) / sigma,
        ]
    )
    step_vec = np.linalg.solve(hess, g)
    r_star, l_star = r1 - step_vec[0], l1 - step_vec[1]
    if r_star < 0.0:
        # Active constraint: minimize over l on the line r = 0.
        r_star = 0.0
        l_star = (gamma * s - c + l_n / sigma) / a22

    allowed = grid.step * drift
    if abs(r_star - r1) > allowed + coarse or abs(l_star - l1) > allowed + coarse:
        raise GridBracketError(
            f"refinement moved ({abs(r_star - r1):.3g}, {abs(l_star - l1):.3g}), "
            f"grid too coarse to bracket"
        )
    value = float(objective(r_star, l_star))
    if value > objective(r1, l1) + 1e-12:
        raise GridBracketError("refinement increased the objective")
    return float(r_star), float(l_star), value


@njit(cache=True)
def _highpass_subbands(x, rows, c):
    """Periodic 3x3 tensor-filter correlation, subbands 1..8 of x."""
    h, w = x.shape
    for a in range(3):
        for i in range(h):
            im = (i - 1) % h
            ip = (i + 1) % h
            for j in range(w):
                rows[a, i, j] = (
                    _FILTERS[a, 0] * x[im, j]
                    + _FILTERS[a, 1] * x[i, j]
                    + _FILTERS[a, 2] * x[ip, j]
                )
    for a in range(3):
        for b in range(3):
            k = 3 * a + b
            if k == 0:
                continue
            for i in range(h):
                for j in range(w):
                    jm = (j - 1) % w
                    jp = (j + 1) % w
                    c[k, i, j] = (
                        _FILTERS[b, 0] * rows[a, i, jm]
                        + _FILTERS[b, 1] * rows[a, i, j]
                        + _FILTERS[b, 2] * rows[a, i, jp]
                    )


@njit(cache=True)
def _descent_energy(r, l, s, v, alpha, beta, gamma, mu, use_tf, rows, c):
    h, w = s.shape
    reg = 0.0
    if use_tf:
        _highpass_subbands(r, rows, c)
        for i in range(h):
            for j in range(w):
                ss = 0.0
                for k in range(1, 9):
                    ss += c[k, i, j] * c[k, i, j]
                reg += v[i, j] * np.sqrt(ss)
    quad = 0.0
    for i in range(h):
        for j in range(w):
            gx = r[i + 1, j] - r[i, j] if i < h - 1 else 0.0
            gy = r[i, j + 1] - r[i, j] if j < w - 1 else 0.0
            if use_tf:
                quad += alpha * (gx * gx + gy * gy)
            else:
                quad += alpha * (gx * gx + gy * gy)
                reg += np.sqrt(gx * gx + gy * gy)
            lx = l[i + 1, j] - l[i, j] if i < h - 1 else 0.0
            ly = l[i, j + 1] - l[i, j] if j < w - 1 else 0.0
            quad += beta * (lx * lx + ly * ly)
            d = l[i, j] - s[i, j] - r[i, j]
            quad += gamma * d * d + mu * l[i, j] * l[i, j]
    return reg + 0.5 * quad


@njit(cache=True)
def _descent_loop(s, v, alpha, beta, gamma, mu, use_tf, iterations, step0, decay, record_every):
    h, w = s.shape
    r = np.zeros((h, w))
    l = s.copy()
    gr = np.empty((h, w))
    gl = np.empty((h, w))
    rows = np.empty((3, h, w))
    c = np.zeros((9, h, w))
    z = np.zeros((9, h, w))
    acc = np.empty((3, h, w))
    n_records = iterations // record_every + 1
    trace = np.empty(n_records)
    n_rec = 0

    for it in range(iterations):
        if it % record_every == 0:
            trace[n_rec] = _descent_energy(r, l, s, v, alpha, beta, gamma, mu, use_tf, rows, c)
            n_rec += 1

        # Quadratic parts of the (sub)gradient.
        for i in range(h):
            for j in range(w):
                d = l[i, j] - s[i, j] - r[i, j]
                gr[i, j] = -gamma * d
                gl[i, j] = gamma * d + mu * l[i, j]
        for i in range(h - 1):
            for j in range(w):
                dr = r[i + 1, j] - r[i, j]
                gr[i, j] -= alpha * dr
                gr[i + 1, j] += alpha * dr
                dl = l[i + 1, j] - l[i, j]
                gl[i, j] -= beta * dl
                gl[i + 1, j] += beta * dl
        for i in range(h):
            for j in range(w - 1):
                dr = r[i, j + 1] - r[i, j]
                gr[i, j] -= alpha * dr
                gr[i, j + 1] += alpha * dr
                dl = l[i, j + 1] - l[i, j]
                gl[i, j] -= beta * dl
                gl[i, j + 1] += beta * dl

        if use_tf:
            # Subgradient of sum_j v |W_hp r|_2: W_hp^T (v * unit(W_hp r)).
            _highpass_subbands(r, rows, c)
            for i in range(h):
                for j in range(w):
                    ss = 0.0
                    for k in range(1, 9):
                        ss += c[k, i, j] * c[k, i, j]
                    m = np.sqrt(ss)
                    wgt = v[i, j] / m if m > 0.0 else 0.0
                    for k in range(1, 9):
                        z[k, i, j] = wgt * c[k, i, j]
            for a in range(3):
                for i in range(h):
                    for j in range(w):
                        jm = (j - 1) % w
                        jp = (j + 1) % w
                        t = 0.0
                        for b in range(3):
                            k = 3 * a + b
                            t += (
                                _FILTERS[b, 0] * z[k, i, jp]
                                + _FILTERS[b, 1] * z[k, i, j]
                                + _FILTERS[b, 2] * z[k, i, jm]
                            )
                        acc[a, i, j] = t
            for i in range(h):
                im = (i - 1) % h
                ip = (i + 1) % h
                for j in range(w):
                    t = 0.0
                    for a in range(3):
                        t += (
                            _FILTERS[a, 0] * acc[a, ip, j]
                            + _FILTERS[a, 1] * acc[a, i, j]
                            + _FILTERS[a, 2] * acc[a, im, j]
                        )
                    gr[i, j] += t
        else:
            # Subgradient of isotropic TV: grad^T (unit(grad r)).
            for i in range(h):
                for j in range(w):
                    gx = r[i + 1, j] - r[i, j] if i < h - 1 else 0.0
                    gy = r[i, j + 1] - r[i, j] if j < w - 1 else 0.0
                    m = np.sqrt(gx * gx + gy * gy)
                    if m > 0.0:
                        ux = gx / m
                        uy = gy / m
                        if i < h - 1:
                            gr[i, j] -= ux
                            gr[i + 1, j] += ux
                        if j < w - 1:
                            gr[i, j] -= uy
                            gr[i, j + 1] += uy

        t_step = step0 * decay / (decay + it)
        for i in range(h):
            for j in range(w):
                rv = r[i, j] - t_step * gr[i, j]
                r[i, j] = rv if rv > 0.0 else 0.0
                l[i, j] -= t_step * gl[i, j]

    trace[n_rec] = _descent_energy(r, l, s, v, alpha, beta, gamma, mu, use_tf, rows, c)
    return r, l, trace[: n_rec + 1]


@dataclass
class DescentResult:
    """Final iterate of the projected subgradient descent."""

    r: np.ndarray
    l: np.ndarray
    energy: float
    energy_trace: np.ndarray  # sampled every record_every steps, plus the final value


def primal_descent_oracle(s, config, iterations=200_000, step0=None, decay=None,
                          record_every=100):
    """Minimize the primal energy by projected subgradient descent.

    An independent cross-check for the saddle-point solver: same energy,
    different algorithm, different transform code (hand-rolled periodic
    stencils).  Steps diminish as step0 * decay / (decay + k); the r
    iterate is projected onto r >= 0 after every step.

    Defaults: step0 is 1 / L with L a bound on the smooth part's
    curvature, decay = iterations / 200 (so the final steps are small
    enough to quench subgradient noise from the l1 kinks).  Intended for
    small instances (<= 64 x 64).
    """
    s = np.asarray(s, dtype=np.float64)
    use_tf = config.regularizer == "tf"
    v = ops.edge_weights(s) if use_tf else np.ones_like(s)
    if step0 is None:
        smooth_curv = 2.0 * config.gamma + config.mu + 8.0 * max(config.alpha, config.beta)
        step0 = 1.0 / smooth_curv
    if decay is None:
        decay = iterations / 200.0
    r, l, trace = _descent_loop(
        s, v, config.alpha, config.beta, config.gamma, config.mu,
        use_tf, iterations, float(step0), float(decay), int(record_every),
    )
    return DescentResult(r=r, l=l, energy=float(trace[-1]), energy_trace=trace)


def descent_energy(r, l, s, config, weights=None):
    """The descent oracle's own energy evaluation (for cross-validation)."""
    s = np.asarray(s, dtype=np.float64)
    use_tf = config.regularizer == "tf"
    if weights is None:
        weights = ops.edge_weights(s) if use_tf else np.ones_like(s)
    rows = np.empty((3,) + s.shape)
    c = np.zeros((9,) + s.shape)
    return float(
        _descent_energy(
            np.asarray(r, dtype=np.float64), np.asarray(l, dtype=np.float64),
            s, weights, config.alpha, config.beta, config.gamma, config.mu,
            use_tf, rows, c,
        )
    )


@dataclass
class SyntheticScene:
    """A ground-truth test scene: image = clip(illumination * reflectance)."""

    image: np.ndarray
    true_labels: LabelMap
    true_reflectance: np.ndarray
    true_illumination: np.ndarray
    seed: int


def save_scene(scene, out_dir):
    """Serialize a scene as raw-float fields plus a JSON manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    image_io.save_field_raw(scene.image, out_dir / "image.f32")
    image_io.save_field_raw(scene.true_reflectance, out_dir / "reflectance.f32")
    image_io.save_field_raw(scene.true_illumination, out_dir / "illumination.f32")
    (out_dir / "labels.u8").write_bytes(
        scene.true_labels.labels.astype(np.uint8).tobytes(order="F")
    )
    manifest = {
        "seed": scene.seed,
        "K": scene.true_labels.K,
        "thresholds": list(scene.true_labels.thresholds.rho),
        "height": int(scene.image.shape[0]),
        "width": int(scene.image.shape[1]),
    }
    (out_dir / "scene.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_scene(scene_dir):
    """Read back a scene written by :func:`save_scene`."""
    scene_dir = Path(scene_dir)
    manifest = json.loads((scene_dir / "scene.json").read_text())
    h, w = manifest["height"], manifest["width"]
    labels = np.frombuffer((scene_dir / "labels.u8").read_bytes(), dtype=np.uint8)
    label_map = LabelMap(
        labels.reshape((h, w), order="F").astype(np.int32),
        int(manifest["K"]),
        Thresholds(tuple(manifest["thresholds"])),
    )
    return SyntheticScene(
        image=image_io.load_field_raw(scene_dir / "image.f32"),
        true_labels=label_map,
        true_reflectance=image_io.load_field_raw(scene_dir / "reflectance.f32"),
        true_illumination=image_io.load_field_raw(scene_dir / "illumination.f32"),
        seed=int(manifest["seed"]),
    )


def synth_biased_scene(height, width, phase_count=2, bias_amplitude=0.5,
                       noise_sigma=0.0, seed=0):
    """Random piecewise-constant reflectance under a smooth illumination dip.

    The reflectance takes ``phase_count`` evenly spaced levels on regions
    with smooth boundaries (level sets of a low-order cosine field); the
    illumination is 1 - bias_amplitude * g with g a normalized mixture of
    Gaussian bumps and a linear ramp.  Deterministic for a fixed seed
    (PCG64).
    """
    if height < 16 or width < 16:
        raise ValueError("scene dimensions must be at least 16")
    if not 0.0 <= bias_amplitude < 1.0:
        raise ValueError("bias_amplitude must lie in [0, 1)")
    if noise_sigma < 0.0:
        raise ValueError("noise_sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(
        np.arange(height) / height, np.arange(width) / width, indexing="ij"
    )

    shape_field = np.zeros((height, width))
    for m in range(3):
        for n in range(3):
            if m == 0 and n == 0:
                continue
            amp = rng.standard_normal()
            phase = rng.uniform(0.0, 2.0 * np.pi)
            shape_field += amp * np.cos(2.0 * np.pi * (m * yy + n * xx) + phase)

    levels = np.linspace(0.35, 1.0, phase_count)
    if phase_count > 1:
        cuts = np.quantile(shape_field, np.arange(1, phase_count) / phase_count)
        region = np.searchsorted(cuts, shape_field.ravel()).reshape(shape_field.shape)
    else:
        region = np.zeros((height, width), dtype=int)
    reflectance = levels[region]

    bump = np.zeros((height, width))
    for _ in range(2):
        cy, cx = rng.uniform(0.15, 0.85, size=2)
        sd = rng.uniform(0.25, 0.45)
        bump += rng.uniform(0.5, 1.0) * np.exp(
            -((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sd**2)
        )
    bump += rng.normal(0.0, 0.3) * yy + rng.normal(0.0, 0.3) * xx
    lo, hi = bump.min(), bump.max()
    g = (bump - lo) / (hi - lo) if hi > lo else np.zeros_like(bump)
    illumination = 1.0 - bias_amplitude * g

    image = illumination * reflectance
    if noise_sigma > 0.0:
        image = image + noise_sigma * rng.standard_normal(image.shape)
    image = np.clip(image, 0.0, 1.0)

    if phase_count > 1:
        scaled = (levels - levels[0]) / (levels[-1] - levels[0])
        interior = (scaled[:-1] + scaled[1:]) / 2.0
        thresholds = Thresholds.from_interior(interior)
    else:
        thresholds = Thresholds((0.0, 1.0))
    true_labels = LabelMap((region + 1).astype(np.int32), phase_count, thresholds)
    return SyntheticScene(image, true_labels, reflectance, illumination, seed)


def segmentation_accuracy(predicted, truth):
    """Best per-pixel agreement over all label permutations, in [0, 1]."""
    if predicted.labels.shape != truth.labels.shape:
        raise ValueError("label maps have different dimensions")
    if predicted.K != truth.K:
        raise ValueError("label maps have different phase counts")
    k = truth.K
    idx = (predicted.labels.ravel() - 1) * k + (truth.labels.ravel() - 1)
    confusion = np.bincount(idx, minlength=k * k).reshape(k, k)
    rows, cols = linear_sum_assignment(-confusion)
    return float(confusion[rows, cols].sum()) / predicted.labels.size


def otsu_threshold(values, bins=256):
    """Classic Otsu threshold of values in [0, 1] (histogram of 256 bins)."""
    values = np.asarray(values, dtype=np.float64).ravel()
    hist, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    total = hist.sum()
    if total == 0:
        return 0.5
    p = hist / total
    centers = (edges[:-1] + edges[1:]) / 2.0
    w0 = np.cumsum(p)
    mu_cum = np.cumsum(p * centers)
    mu_total = mu_cum[-1]
    w1 = 1.0 - w0
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        return 0.5
    between = np.full(bins, -np.inf)
    between[valid] = (mu_total * w0[valid] - mu_cum[valid]) ** 2 / (w0[valid] * w1[valid])
    # The criterion is flat across empty gaps; take the plateau midpoint.
    best = np.flatnonzero(between == between.max())
    return float(edges[int(best[(best.size - 1) // 2]) + 1])


def otsu_binary_labels(image):
    """Two-phase label map from a global Otsu threshold on the raw image."""
    t = float(np.clip(otsu_threshold(image), 1e-6, 1.0 - 1e-6))
    labels = (np.asarray(image) >= t).astype(np.int32) + 1
    return LabelMap(labels, 2, Thresholds.from_interior((t,)))
