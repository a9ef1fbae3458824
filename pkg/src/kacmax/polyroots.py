"""Complex Kac polynomials, their roots, and the maximum-modulus statistic.

Coefficients are stored in ascending order: ``coefficients[k]`` multiplies
``z**k``. Everything that touches many polynomials works on ``(B, n+1)``
coefficient stacks so Monte Carlo drivers stay vectorised.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InvalidInputError
from .linalg import as_vector
from .streams import as_stream

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
MAX_DEGREE = 4096
_ANGLE_OFFSET = 0.7
# pairwise-difference tensors are (chunk, n, n); keep them around 16 MB
_PAIR_BUDGET = 1 << 20


@dataclass(frozen=True)
class Polynomial:
    coefficients: np.ndarray

    def __post_init__(self):
        a = as_vector(self.coefficients)
        if a.size < 2:
            raise InvalidInputError("a polynomial needs degree >= 1")
        if a[-1] == 0:
            raise InvalidInputError("leading coefficient must be nonzero")
        object.__setattr__(self, "coefficients", a)

    @property
    def degree(self):
        return self.coefficients.size - 1

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coefficients)


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray
    residuals: np.ndarray
    iterations: int

    def __len__(self):
        return self.roots.size


def standard_complex_normal(gen, size):
    """i.i.d. complex Gaussians with ``E|G|^2 = 1``."""
    return (gen.standard_normal(size) + 1j * gen.standard_normal(size)) * np.sqrt(0.5)


def sample_kac(n, rng):
    """Kac polynomial of degree ``n`` with standard complex Gaussian coefficients."""
    if int(n) != n or n < 1:
        raise InvalidInputError(f"degree must be an integer >= 1, got {n!r}")
    gen = as_stream(rng).generator()
    a = standard_complex_normal(gen, int(n) + 1)
    while a[-1] == 0:  # probability zero
        a[-1] = standard_complex_normal(gen, 1)[0]
    return Polynomial(a)


def sample_kac_batch(n, count, gen):
    """``(count, n+1)`` stack of Kac coefficients drawn from a numpy Generator."""
    a = standard_complex_normal(gen, (int(count), int(n) + 1))
    zero = a[:, -1] == 0
    while np.any(zero):
        a[zero, -1] = standard_complex_normal(gen, int(zero.sum()))
        zero = a[:, -1] == 0
    return a


# -- Aberth-Ehrlich ---------------------------------------------------------


def initial_guesses(coeffs):
    """Starting points on circles read off the upper Newton polygon.

    For consecutive hull vertices ``i < j`` of ``(k, log|a_k|)`` the ``j - i``
    roots attached to that edge start on the circle of radius
    ``(|a_i| / |a_j|)^(1/(j-i))``, equally spaced with a fixed angular offset.
    """
    a = np.asarray(coeffs, dtype=complex)
    batch, m = a.shape
    n = m - 1
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(a))
    finite = np.isfinite(logs)
    floor = np.where(finite, logs, np.inf).min(axis=1, keepdims=True) - 700.0
    logs = np.where(finite, logs, floor)

    k = np.arange(m)
    dk = k[None, :] - k[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = (logs[:, None, :] - logs[:, :, None]) / dk[None, :, :]
    # vertex test: min over i<k of slope(i,k) > max over j>k of slope(k,j)
    left = np.where((dk > 0)[None, :, :], slope, np.inf).min(axis=1)
    right = np.where((dk > 0)[None, :, :], slope, -np.inf).max(axis=2)
    vertex = left > right
    vertex[:, 0] = True
    vertex[:, n] = True

    idx = np.broadcast_to(k, (batch, m))
    prev_v = np.maximum.accumulate(np.where(vertex, idx, -1), axis=1)[:, :n]
    next_v = np.minimum.accumulate(np.where(vertex, idx, m)[:, ::-1], axis=1)[:, ::-1][:, 1:]
    rows = np.arange(batch)[:, None]
    width = next_v - prev_v
    edge_slope = (logs[rows, next_v] - logs[rows, prev_v]) / width
    radius = np.exp(-edge_slope)
    slot = k[None, :n] - prev_v
    angle = 2.0 * np.pi * slot / width + 2.0 * np.pi * prev_v / n + _ANGLE_OFFSET
    return radius * np.exp(1j * angle)


def _horner(c, z):
    """Value and derivative of ``sum c[:, k] z^k`` at each column of ``z``."""
    p = np.broadcast_to(c[:, -1:], z.shape).copy()
    dp = np.zeros_like(z)
    for k in range(c.shape[1] - 2, -1, -1):
        dp = dp * z + p
        p = p * z + c[:, k : k + 1]
    return p, dp


def _newton_and_residual(a, abs_a, z):
    """Newton correction ``p/p'`` and scaled backward error at every root.

    Outside the unit disk the reversed polynomial is evaluated at ``1/z`` so
    that ``z**n`` never appears explicitly.
    """
    n = a.shape[1] - 1
    outside = np.abs(z) > 1.0
    w = np.where(outside, 1.0 / np.where(outside, z, 1.0), z)

    p, dp = _horner(a, np.where(outside, 0.0, w))
    q, dq = _horner(a[:, ::-1], np.where(outside, w, 0.0))
    scale_in = abs_a.sum(axis=1, keepdims=True)
    scale_out, _ = _horner(abs_a[:, ::-1], np.abs(np.where(outside, w, 0.0)))

    with np.errstate(divide="ignore", invalid="ignore"):
        step_in = p / dp
        step_out = z * q / (n * q - w * dq)
        res_in = np.abs(p) / scale_in
        res_out = np.abs(q) / scale_out.real
    step = np.where(outside, step_out, step_in)
    res = np.where(outside, res_out, res_in)
    return step, res


def _aberth_chunk(a, tol, max_iter):
    batch, m = a.shape
    n = m - 1
    if n == 1:
        z = -a[:, :1] / a[:, 1:]
        _, res = _newton_and_residual(a, np.abs(a), z)
        return z, res, np.ones(batch, dtype=int), np.ones_like(res, dtype=bool)

    abs_a = np.abs(a)
    z = initial_guesses(a)
    active = np.ones(z.shape, dtype=bool)
    iters = np.zeros(batch, dtype=int)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_iter):
        step, res = _newton_and_residual(a, abs_a, z)
        # roots meeting the tolerance take one last (polishing) step, then freeze
        just_done = active & (res <= tol)
        live = active.any(axis=1)
        if not live.any():
            break
        iters[live] += 1
        rows = np.flatnonzero(live)
        zr = z[rows]
        diff = zr[:, :, None] - zr[:, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(offdiag, 1.0 / diff, 0.0)
        s = inv.sum(axis=2)
        nstep = step[rows]
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = nstep / (1.0 - nstep * s)
        bad = ~np.isfinite(corr)
        if bad.any():
            # coincident iterates or vanishing derivative: nudge off the singularity
            corr = np.where(bad, -1e-7 * (1.0 + np.abs(zr)) * np.exp(1j * (rows[:, None] + 1.0)), corr)
        corr = np.where(active[rows], corr, 0.0)
        z[rows] = zr - corr
        active &= ~just_done
    step, res = _newton_and_residual(a, abs_a, z)
    return z, res, iters, res <= tol


def find_roots_batch(coeffs, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """All roots of every polynomial in a ``(B, n+1)`` coefficient stack.

    Returns ``(roots, residuals, iterations)`` with shapes ``(B, n)``,
    ``(B, n)`` and ``(B,)``. Raises ConvergenceError carrying the best
    iterate if any root misses the backward-error tolerance.
    """
    a = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    batch, m = a.shape
    n = m - 1
    if n < 1:
        raise InvalidInputError("polynomials need degree >= 1")
    if n > MAX_DEGREE:
        raise InvalidInputError(f"degree {n} exceeds cap {MAX_DEGREE}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("coefficients contain NaN or Inf")
    if np.any(a[:, -1] == 0):
        raise InvalidInputError("leading coefficient must be nonzero")

    roots = np.empty((batch, n), dtype=complex)
    residuals = np.empty((batch, n))
    iterations = np.empty(batch, dtype=int)
    ok = np.empty((batch, n), dtype=bool)
    chunk = max(1, _PAIR_BUDGET // (n * n))
    for start in range(0, batch, chunk):
        sl = slice(start, start + chunk)
        roots[sl], residuals[sl], iterations[sl], ok[sl] = _aberth_chunk(a[sl], tol, max_iter)
    if not ok.all():
        worst = int(np.argmax(residuals.max(axis=1)))
        raise ConvergenceError(
            f"Aberth iteration did not reach tol={tol:g} within {max_iter} iterations "
            f"(worst polynomial #{worst}, residual {residuals[worst].max():.3e})",
            roots=roots,
            residuals=residuals,
            iterations=iterations,
        )
    return roots, residuals, iterations


def find_roots(p, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Roots of one polynomial by simultaneous Aberth-Ehrlich iteration.

    Convergence is judged per root on the backward error
    ``|P(z)| / sum_k |a_k| max(1, |z|)^k``.
    """
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    try:
        roots, res, iters = find_roots_batch(p.coefficients[None, :], tol, max_iter)
    except ConvergenceError as exc:
        raise ConvergenceError(
            str(exc), roots=exc.roots[0], residuals=exc.residuals[0], iterations=int(exc.iterations[0])
        ) from None
    return RootSet(roots[0], res[0], int(iters[0]))


def max_modulus(r):
    """Largest root modulus; ties resolve to the first index."""
    roots = r.roots if isinstance(r, RootSet) else np.asarray(r)
    if roots.size == 0:
        raise InvalidInputError("empty root set")
    mod = np.abs(roots)
    return float(mod[int(np.argmax(mod))])


def empirical_cdf(samples, grid):
    """Fraction of ``samples`` that are ``<= y`` for each ``y`` in ``grid``."""
    s = np.sort(np.asarray(samples, dtype=float).ravel())
    if s.size == 0:
        raise InvalidInputError("empirical_cdf needs at least one sample")
    g = np.asarray(grid, dtype=float).ravel()
    if np.any(np.diff(g) < 0):
        raise InvalidInputError("grid must be sorted ascending")
    counts = np.searchsorted(s, g, side="right")
    return list(zip(g.tolist(), (counts / s.size).tolist()))


def max_modulus_samples(n, count, rng, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, threads=None):
    """Max root modulus of ``count`` independent Kac polynomials of degree ``n``."""
    from .streams import map_blocks

    def block(gen, size):
        roots, _, _ = find_roots_batch(sample_kac_batch(n, size, gen), tol, max_iter)
        return np.abs(roots).max(axis=1)

    parts = map_blocks(block, count, rng, threads, block=_block_for(n))
    return np.concatenate(parts) if parts else np.zeros(0)


def _block_for(n):
    return 4096 if n <= 8 else 512
