"""
This script contains handy mathematical equations.
It's used to limit code repetition and keep the small-matrix linear algebra in one place. Every routine accepts a
single matrix or a stack of matrices with shape (..., n, n).
"""

import math

import numpy as np

JACOBI_SWEEPS = 12


def mixed_exponent(outer, inner):
    """
    Exponent κ with 1/κ = 1/inner − 1/outer.

    κ is infinite when the exponents coincide and equals inner when outer is infinite.
    """
    if outer == inner:
        return math.inf
    if math.isinf(outer):
        return float(inner)
    return 1 / (1 / inner - 1 / outer)


def conjugate_exponent(q):
    """Hölder conjugate q/(q−1)."""
    if math.isinf(q):
        return 1.0
    if q == 1:
        return math.inf
    return q / (q - 1)


def unit_sphere_area(n: int) -> float:
    """Surface measure ω_{n−1} of the unit sphere in ℝⁿ."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _corner_area(x, y, radius):
    # signed area of {|s| ≤ |x|, |t| ≤ |y|, s² + t² ≤ r²} in the quadrant of (x, y)
    sign = np.sign(x) * np.sign(y)
    x = np.minimum(np.abs(x), radius)
    y = np.minimum(np.abs(y), radius)
    crossing = np.sqrt(radius ** 2 - y ** 2)
    safe = np.where(radius > 0, radius, 1.0)

    def primitive(t):
        # ∫₀ᵗ √(r² − s²) ds
        return 0.5 * (t * np.sqrt(np.clip(radius ** 2 - t ** 2, 0.0, None))
                      + radius ** 2 * np.arcsin(np.clip(t / safe, -1.0, 1.0)))

    area = np.where(x <= crossing, x * y, crossing * y + primitive(x) - primitive(crossing))
    return sign * area


def disc_rectangle_area(low, high, radius):
    """
    Exact area of the rectangles [low₀, high₀] × [low₁, high₁] inside the disc of `radius` about the origin.

    low and high have shape (..., 2); radius broadcasts against their leading shape and may be 0.
    """
    low, high = np.asarray(low, dtype=float), np.asarray(high, dtype=float)
    radius = np.maximum(np.asarray(radius, dtype=float), 0.0)
    x0, y0, x1, y1 = low[..., 0], low[..., 1], high[..., 0], high[..., 1]
    area = (_corner_area(x1, y1, radius) - _corner_area(x0, y1, radius) - _corner_area(x1, y0, radius)
            + _corner_area(x0, y0, radius))
    return np.clip(area, 0.0, None)


def determinant(matrices):
    """Determinant by cofactor expansion for n ≤ 3, LU otherwise."""
    a = np.asarray(matrices, dtype=float)
    n = a.shape[-1]

    if n == 2:
        return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]

    if n == 3:
        return np.sum(a[..., 0, :] * np.cross(a[..., 1, :], a[..., 2, :]), axis=-1)

    return np.linalg.det(a)


def adjugate(matrices):
    """Transposed cofactor matrix, so that A · adj A = det A · I."""
    a = np.asarray(matrices, dtype=float)
    n = a.shape[-1]

    if n == 2:
        adj = np.empty_like(a)
        adj[..., 0, 0] = a[..., 1, 1]
        adj[..., 0, 1] = -a[..., 0, 1]
        adj[..., 1, 0] = -a[..., 1, 0]
        adj[..., 1, 1] = a[..., 0, 0]
        return adj

    if n == 3:
        cofactors = np.stack([np.cross(a[..., 1, :], a[..., 2, :]),
                              np.cross(a[..., 2, :], a[..., 0, :]),
                              np.cross(a[..., 0, :], a[..., 1, :])], axis=-2)
        return np.swapaxes(cofactors, -1, -2)

    cofactors = np.empty_like(a)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(a, i, axis=-2), j, axis=-1)
            cofactors[..., i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return np.swapaxes(cofactors, -1, -2)


def _singular_values_2x2(a):
    e = (a[..., 0, 0] + a[..., 1, 1]) / 2
    f = (a[..., 0, 0] - a[..., 1, 1]) / 2
    g = (a[..., 1, 0] + a[..., 0, 1]) / 2
    h = (a[..., 1, 0] - a[..., 0, 1]) / 2

    sigma_max = np.hypot(e, h) + np.hypot(f, g)
    det = np.abs(determinant(a))

    # |det|/σ_max keeps full relative accuracy where Q − R would cancel
    with np.errstate(invalid="ignore", divide="ignore"):
        sigma_min = np.where(sigma_max > 0, det / np.where(sigma_max > 0, sigma_max, 1.0), 0.0)

    return sigma_max, np.minimum(sigma_min, sigma_max)


def _singular_values_jacobi(a, sweeps=JACOBI_SWEEPS):
    """One-sided (Hestenes) Jacobi: orthogonalize columns by plane rotations, singular values are column norms."""
    work = np.array(a, dtype=float, copy=True)
    n = work.shape[-1]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    for _ in range(sweeps):
        for i, j in pairs:
            ci = work[..., :, i].copy()
            cj = work[..., :, j].copy()
            alpha = np.sum(ci * ci, axis=-1)
            beta = np.sum(cj * cj, axis=-1)
            gamma = np.sum(ci * cj, axis=-1)

            rotate = np.abs(gamma) > np.finfo(float).eps * np.sqrt(alpha * beta)
            safe_gamma = np.where(rotate, gamma, 1.0)
            zeta = (beta - alpha) / (2 * safe_gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1 + zeta * zeta))
            c = np.where(rotate, 1 / np.sqrt(1 + t * t), 1.0)
            s = np.where(rotate, c * t, 0.0)

            work[..., :, i] = c[..., None] * ci - s[..., None] * cj
            work[..., :, j] = s[..., None] * ci + c[..., None] * cj

    norms = np.sqrt(np.sum(work * work, axis=-2))
    return norms.max(axis=-1), norms.min(axis=-1)


def singular_values(matrices):
    """
    Largest and smallest singular value of each matrix.

    :param matrices: array with shape (..., n, n)
    :return: (σ_max, σ_min), each with shape (...)
    """
    a = np.asarray(matrices, dtype=float)
    n = a.shape[-1]

    if a.shape[-2] != n:
        raise ValueError(f"Not a square matrix stack: shape {a.shape}")

    if n == 2:
        return _singular_values_2x2(a)

    if n == 3:
        return _singular_values_jacobi(a)

    sigma = np.linalg.svd(a, compute_uv=False)
    return sigma[..., 0], sigma[..., -1]


def operator_norm(matrices):
    return singular_values(matrices)[0]


def weighted_norm(values, weights, exponent):
    """
    Midpoint-rule L_exponent norm of a non-negative cell field.

    Any infinite cell makes the norm infinite. exponent = inf returns the grid maximum (esssup approximation).
    Sums use numpy's pairwise reduction so the result does not depend on thread count.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)

    if values.size == 0:
        return 0.0

    if np.any(np.isinf(values)):
        return math.inf

    if math.isinf(exponent):
        return float(np.max(values))

    with np.errstate(over="ignore"):
        total = float(np.sum(values ** exponent * weights))

    if math.isinf(total):
        return math.inf

    return total ** (1 / exponent)


def relative_difference(a, b):
    scale = max(abs(a), abs(b))
    if scale == 0:
        return 0.0
    if math.isinf(scale):
        return 0.0 if a == b else math.inf
    return abs(a - b) / scale


def json_number(value):
    """Report encoding of a scalar: infinities become the strings "inf" and "-inf", NaN becomes None."""
    if value is None:
        return None
    value = float(value)
    if math.isnan(value):
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value
