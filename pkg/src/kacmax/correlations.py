"""Correlation functions of Kac roots, the Bergman Fredholm determinant and gap series.

Convention: the polynomial has ``n + 1`` coefficients (degree ``n``), so the
covariance of ``P(z)`` and ``P(w)`` is ``h(z conj w)`` with
``h(x) = sum_{m=0}^{n} x^m``. Finite-``n`` correlation functions are
densities with respect to Lebesgue measure; ``rho_limit`` is a density with
respect to ``dz / pi`` in each variable, the natural normalisation of the
Bergman kernel ``1 / (1 - z conj w)^2``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .errors import DomainError, InvalidInputError, SizeError
from .linalg import as_vector, permanent_batch, vandermonde_abs2
from .streams import as_stream

CORRELATION_MAX_K = 8
GAP_MAX_K = 4
DEFAULT_RADIAL = 64
DEFAULT_ANGULAR = 128
DENSE_MAX = 4096


def _check_order(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidInputError(f"degree must be an integer >= 1, got {n!r}")
    return int(n)


def _series(x, weights):
    """``sum_m weights[m] x^m`` by Horner, elementwise over ``x``."""
    acc = np.full(x.shape, weights[-1], dtype=complex)
    for c in weights[-2::-1]:
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class CovarianceTriple:
    """Covariances of ``P`` and ``P'`` at ``k`` points.

    ``A[i,j] = E P(z_i) conj P(z_j)``, ``B[i,j] = E P(z_i) conj P'(z_j)`` and
    ``C[i,j] = E P'(z_i) conj P'(z_j)``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    n: int


def _triple(z, n):
    # z: (..., k); returns stacked A, B, C with the same leading shape
    m = np.arange(n + 1, dtype=float)
    x = z[..., :, None] * z[..., None, :].conj()
    a = _series(x, np.ones(n + 1))
    hp = _series(x, m[1:]) if n >= 1 else np.zeros_like(x)
    c = _series(x, m[1:] ** 2)
    b = z[..., :, None] * hp
    return a, b, c


def covariance_triple(z, n):
    pts = as_vector(z)
    n = _check_order(n)
    a, b, c = _triple(pts, n)
    return CovarianceTriple(a, b, c, n)


def _conditional(a, b, c):
    """``C - B^* A^{-1} B``: covariance of ``P'`` given ``P = 0`` at the points."""
    sol = np.linalg.solve(a, b)
    return c - np.swapaxes(b.conj(), -1, -2) @ sol


def rho_finite_batch(points, n):
    """``rho_k`` at each row of a ``(B, k)`` array (Lebesgue density)."""
    z = np.asarray(points, dtype=complex)
    if z.ndim != 2:
        raise InvalidInputError(f"expected (batch, k) points, got shape {z.shape}")
    k = z.shape[1]
    if k > CORRELATION_MAX_K:
        raise SizeError(f"correlation functions are limited to k <= {CORRELATION_MAX_K}")
    n = _check_order(n)
    if k == 0:
        return np.ones(z.shape[0])
    if k > n:
        return np.zeros(z.shape[0])  # only n roots exist
    a, b, c = _triple(z, n)
    sigma = _conditional(a, b, c)
    per = permanent_batch(sigma).real
    det = np.linalg.det(np.pi * a).real
    return per / det


def rho_finite(z, n):
    """k-point correlation ``per(C - B^* A^{-1} B) / det(pi A)`` of the degree-``n`` Kac zeros.

    >>> round(rho_finite([0.0], 1) * np.pi, 12)
    1.0
    """
    pts = as_vector(z)
    if pts.size > CORRELATION_MAX_K:
        raise SizeError(f"correlation functions are limited to k <= {CORRELATION_MAX_K}")
    if pts.size > 1 and vandermonde_abs2(pts) == 0.0:
        raise InvalidInputError("correlation points must be pairwise distinct")
    n = _check_order(n)
    if pts.size > n:
        return 0.0
    a, _, _ = _triple(pts, n)
    if np.linalg.cond(a) > 1e14:
        raise InvalidInputError("covariance matrix is numerically singular; points too close")
    return float(rho_finite_batch(pts[None, :], n)[0])


def _bergman_gram(z):
    return 1.0 / (1.0 - z[..., :, None] * z[..., None, :].conj()) ** 2


def rho_limit(z):
    """``det[1 / (1 - z_i conj z_j)^2]``, the limiting correlation w.r.t. ``dz/pi``."""
    pts = as_vector(z)
    if np.any(np.abs(pts) >= 1.0):
        raise DomainError("limit correlations are defined inside the open unit disk")
    if pts.size > 1 and vandermonde_abs2(pts) == 0.0:
        raise InvalidInputError("correlation points must be pairwise distinct")
    return float(np.linalg.det(_bergman_gram(pts)).real)


def rho_limit_batch(points):
    z = np.asarray(points, dtype=complex)
    if z.shape[1] == 0:
        return np.ones(z.shape[0])
    return np.linalg.det(_bergman_gram(z)).real


# -- Nystrom discretisation of the Bergman operator on D(t) -------------------


@dataclass(frozen=True)
class NystromGrid:
    """Product rule on ``D(t)``: Gauss-Legendre in radius, trapezoid in angle.

    Weights are for the measure ``dz / pi`` and sum to ``t^2``.
    """

    t: float
    radial_nodes: np.ndarray
    radial_weights: np.ndarray
    angular: int

    @classmethod
    def build(cls, t, radial=DEFAULT_RADIAL, angular=DEFAULT_ANGULAR):
        t = float(t)
        if not 0.0 < t < 1.0:
            raise DomainError(f"the Bergman kernel needs 0 < t < 1, got {t}")
        if radial < 1 or angular < 1:
            raise InvalidInputError("grid sizes must be positive")
        x, w = roots_legendre(int(radial))
        r = 0.5 * t * (x + 1.0)
        # dz/pi = r dr dtheta / pi, and each angular node carries 2 pi / angular
        wr = 0.5 * t * w * r * 2.0 / angular
        return cls(t, r, wr, int(angular))

    @property
    def points(self):
        theta = 2.0 * np.pi * np.arange(self.angular) / self.angular
        return (self.radial_nodes[:, None] * np.exp(1j * theta)[None, :]).ravel()

    @property
    def weights(self):
        return np.repeat(self.radial_weights, self.angular)


def nystrom_eigenvalues(t, grid=None, dense=False):
    """Eigenvalues (descending) of ``W^(1/2) K W^(1/2)`` for the Bergman kernel on ``D(t)``.

    The grid is rotation invariant, so the matrix is block circulant in the
    angular index; an FFT splits it into one real symmetric radial block per
    angular mode. ``dense=True`` diagonalises the full Hermitian matrix
    instead and is meant for small grids.
    """
    if grid is None:
        grid = NystromGrid.build(t)
    elif abs(grid.t - float(t)) > 0.0:
        raise InvalidInputError(f"grid radius {grid.t} does not match t={t}")
    sw = np.sqrt(grid.radial_weights)
    if dense:
        size = grid.radial_nodes.size * grid.angular
        if size > DENSE_MAX:
            raise SizeError(f"dense Nystrom matrix of size {size} exceeds {DENSE_MAX}")
        z = grid.points
        w = np.sqrt(grid.weights)
        m = w[:, None] * _bergman_gram(z) * w[None, :]
        return np.sort(np.linalg.eigvalsh(m))[::-1]
    r = grid.radial_nodes
    theta = 2.0 * np.pi * np.arange(grid.angular) / grid.angular
    rr = r[:, None, None] * r[None, :, None] * np.exp(-1j * theta)[None, None, :]
    k = 1.0 / (1.0 - rr) ** 2
    blocks = np.fft.fft(k, axis=2).real * (sw[:, None] * sw[None, :])[:, :, None]
    eig = np.linalg.eigvalsh(np.moveaxis(blocks, 2, 0))
    return np.sort(eig.ravel())[::-1]


def fredholm_bergman(t, grid=None, dense=False):
    """``det(I - B)`` for the Bergman operator on ``L^2(D(t), dz/pi)``.

    Exact value ``prod_{k>=1} (1 - t^(2k))``.
    """
    t = float(t)
    if not 0.0 < t < 1.0:
        raise DomainError(f"the Bergman kernel needs 0 < t < 1, got {t}")
    eig = nystrom_eigenvalues(t, grid, dense)
    return float(np.prod(1.0 - eig))


def apply_bergman(t, f, grid=None):
    """Discretised ``(B f)(z) = int_{D(t)} f(w) / (1 - z conj w)^2 dw/pi`` at the grid points."""
    if grid is None:
        grid = NystromGrid.build(t)
    z = grid.points
    return _bergman_gram(z) @ (grid.weights * f(z))


# -- inclusion-exclusion gap series -------------------------------------------


@dataclass(frozen=True)
class GapSeries:
    y: float
    value: float
    terms: tuple
    std_errors: tuple
    k_max: int
    truncation_estimate: float
    kernel: str


def _uniform_disk(gen, shape, radius):
    r = radius * np.sqrt(gen.random(shape))
    return r * np.exp(2j * np.pi * gen.random(shape))


def gap_probability_series(y, n="limit", k_max=GAP_MAX_K, mc_points=200_000, rng=None):
    """``P(rho <= y) = sum_k (-1)^k / k! int_{D(1/y)^k} rho_k`` by Monte Carlo per term.

    Inversion ``z -> 1/z`` maps roots outside ``D(y)`` to roots of the
    reversed polynomial inside ``D(1/y)``; the reversed polynomial has the
    same law, so the same correlation functions apply. ``n='limit'`` uses
    the Bergman determinant. The truncation estimate is the size of the
    last term kept.
    """
    y = float(y)
    if not y > 1.0:
        raise DomainError(f"gap series needs y > 1, got {y}")
    k_max = int(k_max)
    if not 0 <= k_max <= GAP_MAX_K:
        raise SizeError(f"gap series supports 0 <= k_max <= {GAP_MAX_K}, got {k_max}")
    limit = isinstance(n, str)
    if limit and n != "limit":
        raise InvalidInputError(f"n must be an integer or 'limit', got {n!r}")
    if not limit:
        n = _check_order(n)
    t = 1.0 / y
    stream = as_stream(rng)
    terms = [1.0]
    errors = [0.0]
    fact = 1.0
    for k in range(1, k_max + 1):
        fact *= k
        gen = stream.child(k).generator()
        z = _uniform_disk(gen, (int(mc_points), k), t)
        if limit:
            # density w.r.t. dz/pi: each factor of the domain contributes t^2
            vals = rho_limit_batch(z) * t ** (2 * k)
        else:
            vals = rho_finite_batch(z, n) * (np.pi * t * t) ** k
        sign = -1.0 if k % 2 else 1.0
        terms.append(sign * float(vals.mean()) / fact)
        errors.append(float(vals.std(ddof=1) / np.sqrt(len(vals))) / fact)
    return GapSeries(
        y=y,
        value=float(sum(terms)),
        terms=tuple(terms),
        std_errors=tuple(errors),
        k_max=k_max,
        truncation_estimate=abs(terms[-1]),
        kernel="limit" if limit else f"n={n}",
    )
