"""Truncated-CUE eigenvalue ensemble and the functionals built on it.

The law of interest on the unit disk is ``|Delta(z)|^2 prod dz / pi^n``. It is
realised two ways:

* ``truncation``: eigenvalues of the top-left ``n x n`` block of a Haar
  unitary of size ``n + 1``, found through the characteristic polynomial
  (Faddeev-LeVerrier) and the Aberth solver;
* ``dpp``: the projection determinantal process with kernel
  ``g_n(z conj(w)) / pi``, sampled sequentially.

Both return ``(count, n)`` arrays of points; ``EnsembleSample`` wraps a single
draw.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InvalidInputError, SamplerError, SizeError
from .linalg import as_vector, elementary_symmetric, elementary_symmetric_batch
from .polyroots import find_roots_batch, standard_complex_normal
from .streams import as_stream, map_blocks

SAMPLERS = ("truncation", "dpp")
TRUNCATION_MAX_N = 256
DPP_MAX_PROPOSALS = 10**6
BOUNDARY = 1.0 - 1e-14


def _check_order(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidInputError(f"ensemble size must be an integer >= 1, got {n!r}")
    return int(n)


# -- the kernel function g_n -------------------------------------------------


@dataclass(frozen=True)
class KernelG:
    """``g_n(x) = sum_{j<n} (j+1) x^j``; the reproducing kernel is ``g_n(u conj v)``."""

    n: int

    def __post_init__(self):
        _check_order(self.n)

    def __call__(self, x):
        return g_eval(self, x)


def g_eval(k, x):
    """Horner evaluation of ``g_n`` at scalar or array ``x``."""
    n = k.n if isinstance(k, KernelG) else _check_order(k)
    x = np.asarray(x, dtype=complex)
    acc = np.full(x.shape, float(n), dtype=complex)
    for j in range(n - 1, 0, -1):
        acc = acc * x + j
    return acc if acc.ndim else complex(acc)


def g_closed_form(n, x):
    """``(1 - (n+1) x^n + n x^(n+1)) / (1 - x)^2``, valid for ``x != 1``."""
    x = np.asarray(x, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (1.0 - (n + 1) * x**n + n * x ** (n + 1)) / (1.0 - x) ** 2
    return out if out.ndim else complex(out)


# -- Haar unitaries and the truncation route --------------------------------


def haar_unitary_batch(m, count, gen):
    """``(count, m, m)`` Haar unitaries from QR of complex Ginibre matrices.

    Column ``j`` of ``Q`` is multiplied by ``r_jj / |r_jj|`` which makes the
    factorisation unique (positive diagonal in ``R``) and the law of ``Q``
    exactly Haar.
    """
    g = standard_complex_normal(gen, (int(count), int(m), int(m)))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def haar_unitary(m, rng):
    """One Haar-distributed ``m x m`` unitary matrix."""
    m = _check_order(m)
    return haar_unitary_batch(m, 1, as_stream(rng).generator())[0]


def faddeev_leverrier(matrices):
    """Characteristic polynomial ``det(z I - A)`` by the Faddeev-LeVerrier recursion.

    Accepts a single ``(n, n)`` matrix or a ``(B, n, n)`` stack and returns
    ascending coefficients (the last one is 1). Cost is ``n`` matrix products,
    so ``O(n^4)`` overall.
    """
    a = np.asarray(matrices, dtype=complex)
    single = a.ndim == 2
    if single:
        a = a[None]
    batch, n, n2 = a.shape
    if n != n2:
        raise InvalidInputError(f"expected square matrices, got {a.shape[1:]}")
    coeffs = np.zeros((batch, n + 1), dtype=complex)
    coeffs[:, n] = 1.0
    eye = np.eye(n, dtype=complex)
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = m + coeffs[:, n - k + 1, None, None] * eye
        am = a @ m
        coeffs[:, n - k] = -np.trace(am, axis1=1, axis2=2) / k
        m = am
    return coeffs[0] if single else coeffs


def clamp_to_disk(points):
    """Pull points with ``|z| >= 1 - 1e-14`` radially back to that radius."""
    z = np.asarray(points, dtype=complex).copy()
    r = np.abs(z)
    out = r >= BOUNDARY
    z[out] *= BOUNDARY / r[out]
    return z


def truncation_batch(n, count, gen):
    """``(count, n)`` eigenvalue sets of truncated Haar unitaries of size ``n + 1``."""
    n = _check_order(n)
    if n > TRUNCATION_MAX_N:
        raise SizeError(f"truncation sampler is capped at n={TRUNCATION_MAX_N}; use the dpp sampler")
    u = haar_unitary_batch(n + 1, count, gen)
    block = u[:, :n, :n]
    if n == 1:
        return clamp_to_disk(block[:, :, 0])
    coeffs = faddeev_leverrier(block)
    try:
        roots, _, _ = find_roots_batch(coeffs)
    except ConvergenceError as exc:
        raise SamplerError(f"eigenvalue solve failed for a truncated unitary block: {exc}") from exc
    return clamp_to_disk(roots)


# -- the projection DPP route -----------------------------------------------


def _propose(gen, shape, n):
    j = gen.integers(0, n, shape)
    r = gen.random(shape) ** (0.5 / (j + 1.0))
    return r * np.exp(2j * np.pi * gen.random(shape))


def dpp_batch(n, count, gen, max_proposals=DPP_MAX_PROPOSALS):
    """``(count, n)`` draws of the projection DPP, advanced in lockstep.

    Point ``i`` is proposed from ``g_n(|z|^2) / (n pi)`` and accepted with
    probability equal to the squared norm of the feature vector left after
    projecting out the span of the points already placed, divided by its full
    squared norm. Each round draws a short run of i.i.d. proposals per row and
    keeps the first accepted one, which is the same rejection sampler with
    fewer Python-level loops.
    """
    n = _check_order(n)
    count = int(count)
    points = np.zeros((count, n), dtype=complex)
    # conjugated orthonormal basis of the span so far: conj_basis[b, :i]
    conj_basis = np.zeros((count, n, n), dtype=complex)
    weights = np.sqrt(np.arange(1, n + 1))
    for i in range(n):
        pending = np.arange(count)
        run = min(64, -(-2 * n // (n - i)))
        used = 0
        while pending.size:
            if used >= max_proposals:
                raise SamplerError(f"dpp sampler hit the cap of {max_proposals} proposals at point {i}")
            used += run
            z = _propose(gen, (pending.size, run), n)
            phi = np.ones(z.shape + (n,), dtype=complex)
            if n > 1:
                phi[..., 1:] = np.cumprod(np.broadcast_to(z[..., None], z.shape + (n - 1,)), axis=-1)
            phi *= weights
            full = np.sum(phi.real**2 + phi.imag**2, axis=2)
            if i:
                cb = conj_basis[:, :i] if pending.size == count else conj_basis[pending, :i]
                coef = phi @ cb.transpose(0, 2, 1)
                left = full - np.sum(coef.real**2 + coef.imag**2, axis=2)
            else:
                left = full
            ok = gen.random(full.shape) * full < left
            hit = ok.any(axis=1)
            first = np.argmax(ok, axis=1)[hit]
            rows = pending[hit]
            pick = phi[hit, first]
            points[rows, i] = z[hit, first]
            if i:
                e = conj_basis[rows, :i].conj()
                pick = pick - np.einsum("bm,bmj->bj", coef[hit, first], e)
                # second Gram-Schmidt pass keeps the basis orthonormal to roundoff
                pick = pick - np.einsum("bm,bmj->bj", np.einsum("bmj,bj->bm", e.conj(), pick), e)
            conj_basis[rows, i] = (pick / np.linalg.norm(pick, axis=1)[:, None]).conj()
            pending = pending[~hit]
    return clamp_to_disk(points)


# -- public samplers -------------------------------------------------------


@dataclass(frozen=True)
class EnsembleSample:
    points: np.ndarray
    method: str
    n: int

    def __post_init__(self):
        if self.method not in SAMPLERS:
            raise InvalidInputError(f"unknown sampler {self.method!r}")
        pts = np.asarray(self.points, dtype=complex)
        if pts.shape != (self.n,):
            raise InvalidInputError(f"expected {self.n} points, got shape {pts.shape}")
        if np.any(np.abs(pts) > 1.0):
            raise InvalidInputError("ensemble points must lie in the closed unit disk")
        object.__setattr__(self, "points", pts)


def _batch_fn(sampler):
    if sampler == "truncation":
        return truncation_batch
    if sampler == "dpp":
        return dpp_batch
    raise InvalidInputError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")


def sample_truncation(n, rng):
    n = _check_order(n)
    pts = truncation_batch(n, 1, as_stream(rng).generator())[0]
    return EnsembleSample(pts, "truncation", n)


def sample_dpp(n, rng):
    n = _check_order(n)
    pts = dpp_batch(n, 1, as_stream(rng).generator())[0]
    return EnsembleSample(pts, "dpp", n)


def ensemble_points(n, count, rng, sampler="dpp", threads=None, block=None):
    """``(count, n)`` independent ensemble draws, reproducible for any thread count."""
    n = _check_order(n)
    fn = _batch_fn(sampler)
    if block is None:
        block = max(64, min(4096, (1 << 21) // (n * n)))
    parts = map_blocks(lambda gen, size: fn(n, size, gen), count, rng, threads, block=block)
    return np.concatenate(parts) if parts else np.zeros((0, n), dtype=complex)


# -- functionals -----------------------------------------------------------


def _check_y(y):
    y = float(y)
    if not 0.0 <= y <= 1.0:
        raise InvalidInputError(f"y must lie in [0, 1], got {y}")
    return y


def eta(sample, y):
    """``sum_k y^(2k) |e_k(points)|^2``, the mean of ``|det(I - y e^{i t} M)|^2`` over ``t``."""
    pts = sample.points if isinstance(sample, EnsembleSample) else as_vector(sample)
    y = _check_y(y)
    e = elementary_symmetric(pts)
    return float(np.sum(y ** (2 * np.arange(e.size)) * np.abs(e) ** 2))


def eta_batch(points, y):
    """``eta`` for every row of a ``(B, n)`` point array."""
    y = _check_y(y)
    e = elementary_symmetric_batch(points)
    return np.sum(y ** (2 * np.arange(e.shape[1]))[None, :] * np.abs(e) ** 2, axis=1)
