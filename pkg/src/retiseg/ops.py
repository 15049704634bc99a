"""Discrete linear operators on image grids.

Provides the forward-difference gradient and its exact adjoint, the
1-level undecimated 9-subband framelet transform built from the piecewise
linear B-spline filters, Gaussian pre-smoothing, the edge-indicator
weight field, and a power-iteration operator-norm estimator.

Conventions
-----------
* Scalar fields are (H, W) float arrays.
* Vector fields are (2, H, W): channel 0 holds differences along rows
  (axis 0), channel 1 along columns (axis 1).  The gradient is a forward
  difference with a zero last row (channel 0) / last column (channel 1).
* Framelet coefficients are (9, H, W).  Subband a*3+b applies filter a
  along rows and filter b along columns; subband 0 is the low pass.
  The framelet transform uses periodic extension, which makes the
  perfect-reconstruction identity synthesize(analyze(u)) == u exact up
  to floating-point rounding.
"""

import numpy as np
from scipy import ndimage

# Piecewise linear B-spline filter bank: one low pass, two high passes.
# Taps are at offsets (-1, 0, +1).
FILTER_BANK = (
    np.array([1.0, 2.0, 1.0]) / 4.0,
    np.array([1.0, 0.0, -1.0]) * (np.sqrt(2.0) / 4.0),
    np.array([-1.0, 2.0, -1.0]) / 4.0,
)

N_SUBBANDS = 9


def tensor_filter(k):
    """The 3x3 tensor-product filter of subband k (row filter x col filter)."""
    return np.outer(FILTER_BANK[k // 3], FILTER_BANK[k % 3])


def grad(field):
    """Forward-difference gradient, zero on the far boundary.

    Returns a (2, H, W) array: out[0][i, j] = field[i+1, j] - field[i, j]
    for i < H-1 and 0 on the last row; out[1] likewise along columns.
    """
    field = np.asarray(field, dtype=np.float64)
    out = np.zeros((2,) + field.shape)
    out[0, :-1, :] = field[1:, :] - field[:-1, :]
    out[1, :, :-1] = field[:, 1:] - field[:, :-1]
    return out


def grad_adjoint(vf):
    """Exact adjoint of :func:`grad` (a negative divergence).

    Satisfies <grad(u), vf> == <u, grad_adjoint(vf)> for every u.  The
    last row of vf[0] and last column of vf[1] never contribute, matching
    the gradient's zero-boundary rule.
    """
    vf = np.asarray(vf, dtype=np.float64)
    out = np.zeros(vf.shape[1:])
    out[:-1, :] -= vf[0, :-1, :]
    out[1:, :] += vf[0, :-1, :]
    out[:, :-1] -= vf[1, :, :-1]
    out[:, 1:] += vf[1, :, :-1]
    return out


def _correlate_periodic(u, taps, axis):
    # (T u)[n] = sum_m taps[m+1] * u[n+m], periodic indexing.
    return (
        taps[0] * np.roll(u, 1, axis=axis)
        + taps[1] * u
        + taps[2] * np.roll(u, -1, axis=axis)
    )


def _convolve_periodic(u, taps, axis):
    # Adjoint of _correlate_periodic with the same taps.
    return (
        taps[0] * np.roll(u, -1, axis=axis)
        + taps[1] * u
        + taps[2] * np.roll(u, 1, axis=axis)
    )


def framelet_analyze(field):
    """1-level undecimated framelet decomposition, (H, W) -> (9, H, W)."""
    field = np.asarray(field, dtype=np.float64)
    out = np.empty((N_SUBBANDS,) + field.shape)
    for a, row_taps in enumerate(FILTER_BANK):
        rows = _correlate_periodic(field, row_taps, axis=0)
        for b, col_taps in enumerate(FILTER_BANK):
            out[a * 3 + b] = _correlate_periodic(rows, col_taps, axis=1)
    return out


def framelet_synthesize(coeffs):
    """Adjoint of :func:`framelet_analyze`, (9, H, W) -> (H, W).

    Because the filter bank satisfies the unitary extension principle,
    synthesize(analyze(u)) reconstructs u exactly.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    out = np.zeros(coeffs.shape[1:])
    for a, row_taps in enumerate(FILTER_BANK):
        acc = np.zeros_like(out)
        for b, col_taps in enumerate(FILTER_BANK):
            acc += _convolve_periodic(coeffs[a * 3 + b], col_taps, axis=1)
        out += _convolve_periodic(acc, row_taps, axis=0)
    return out


def gaussian_kernel(variance):
    """Normalized discrete Gaussian taps, truncated at radius ceil(4*sqrt(var))."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    radius = int(np.ceil(4.0 * np.sqrt(variance)))
    d = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(d**2) / (2.0 * variance))
    return taps / taps.sum()


def gaussian_smooth(field, variance):
    """Separable Gaussian smoothing with symmetric boundary extension."""
    taps = gaussian_kernel(variance)
    field = np.asarray(field, dtype=np.float64)
    out = ndimage.correlate1d(field, taps, axis=0, mode="reflect")
    return ndimage.correlate1d(out, taps, axis=1, mode="reflect")


def edge_weights(s):
    """Edge-indicator weights v(j) = 1 / (1 + eps * sum_k |(H_k s~)(j)|^2).

    s~ is s smoothed with a variance-1 Gaussian, the sum runs over the
    eight high-pass subbands, and eps = 50 / (number of pixels).  Values
    lie in (0, 1], equal to 1 exactly where all high passes vanish.
    """
    s = np.asarray(s, dtype=np.float64)
    coeffs = framelet_analyze(gaussian_smooth(s, 1.0))
    eps = 50.0 / s.size
    return 1.0 / (1.0 + eps * np.sum(coeffs[1:] ** 2, axis=0))


def dual_radius(weights):
    """Per-pixel l2 norm of the weight matrix's diagonal column.

    The diagonal stacks one zero (low-pass) block and eight copies of the
    weight field, so the norm is sqrt(8) * v(j).
    """
    return np.sqrt(8.0) * np.asarray(weights, dtype=np.float64)


def operator_norm_estimate(apply, apply_adjoint, dim_in, iterations=200, seed=0):
    """Estimate the spectral norm of a linear map by power iteration.

    ``apply`` and ``apply_adjoint`` act on flat vectors and must form an
    adjoint pair (verified on random probes before iterating).  The
    returned value is the square root of a Rayleigh quotient of K^T K, so
    it never exceeds the true norm.  Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)

    x = rng.standard_normal(dim_in)
    y = apply(x)
    probe = rng.standard_normal(y.size)
    lhs = float(np.dot(y, probe))
    rhs = float(np.dot(x, apply_adjoint(probe)))
    scale = max(abs(lhs), abs(rhs), 1.0)
    if abs(lhs - rhs) > 1e-10 * scale:
        raise ValueError(
            f"apply/apply_adjoint are not an adjoint pair: <Kx,y>={lhs!r} <x,K*y>={rhs!r}"
        )

    x /= np.linalg.norm(x)
    for _ in range(iterations):
        z = apply_adjoint(apply(x))
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        x = z / nz
    return float(np.linalg.norm(apply(x)))


def grad_operator(shape):
    """(apply, apply_adjoint, dim_in) for the gradient on a given grid."""
    h, w = shape

    def apply(x):
        return grad(x.reshape(h, w)).ravel()

    def apply_adjoint(y):
        return grad_adjoint(y.reshape(2, h, w)).ravel()

    return apply, apply_adjoint, h * w


def coupled_operator(shape, regularizer="tf"):
    """The stacked operator (r, l) -> (W r, grad r, grad l) on flat vectors.

    With ``regularizer="tv"`` the framelet block W is replaced by a second
    gradient block.  This is the operator whose norm enters the step-size
    condition of the saddle-point iteration.
    """
    h, w = shape
    n = h * w
    use_tf = regularizer == "tf"

    def apply(x):
        r = x[:n].reshape(h, w)
        ell = x[n:].reshape(h, w)
        first = framelet_analyze(r) if use_tf else grad(r)
        return np.concatenate([first.ravel(), grad(r).ravel(), grad(ell).ravel()])

    def apply_adjoint(y):
        m = (N_SUBBANDS if use_tf else 2) * n
        first = y[:m].reshape(-1, h, w)
        q = y[m : m + 2 * n].reshape(2, h, w)
        u = y[m + 2 * n :].reshape(2, h, w)
        top = framelet_synthesize(first) if use_tf else grad_adjoint(first)
        return np.concatenate([(top + grad_adjoint(q)).ravel(), grad_adjoint(u).ravel()])

    return apply, apply_adjoint, 2 * n
