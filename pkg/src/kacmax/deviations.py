"""Deterministic limit objects and Monte Carlo estimators for the maximum modulus.

Two regimes are covered:

* fluctuations above the unit circle, where ``P(rho_n <= y)`` tends to
  ``prod_k (1 - y^(-2k))``;
* left deviations ``y < 1``, where ``P(rho_n <= y)`` equals
  ``y^(n(n+1)) E[eta^-(n+1)]`` over the truncated unitary ensemble, and the
  constant ``F(y)`` is a signed series of torus integrals ``J_k(y)``.

Products such as ``y^(n(n+1))`` and ``n^(n+1)`` are carried in log space.
"""

from dataclasses import dataclass, field
from math import factorial, lgamma, log

import numpy as np
from scipy.special import logsumexp

from .ensembles import SAMPLERS, KernelG, ensemble_points, eta_batch, g_eval
from .errors import CrossValidationError, DomainError, InvalidInputError, SizeError
from .linalg import as_vector, determinant, vandermonde_abs2
from .polyroots import max_modulus_samples
from .symfunc import cauchy_series_J, series_cost

DEFAULT_NODES = 64
QUADRATURE_MAX_K = 8
# grid points visited by one quadrature_J call
QUADRATURE_BUDGET = 10**8
SERIES_BUDGET = 3 * 10**6
CROSS_TOL = 1e-7
DIRECT_MC_BUDGET = 2 * 10**9
DEFAULT_K_MAX = 6


# -- fluctuation regime -----------------------------------------------------


def limit_cdf(y, tol=1e-15):
    """``prod_{k>=1} (1 - y^(-2k))`` for ``y > 1`` and 0 otherwise.

    The product is cut at the first ``K`` where the dropped part of the
    logarithm, at most ``q^(K+1) / ((1-q)(1-q^(K+1)))`` with ``q = y^-2``,
    falls below ``tol``.
    """
    y = float(y)
    if not y >= 0.0:
        raise InvalidInputError(f"y must be >= 0, got {y}")
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if y <= 1.0:
        return 0.0
    if np.isinf(y):
        return 1.0
    q = y**-2.0
    log_q = -2.0 * log(y)
    total = 0.0
    k = 0
    while True:
        k += 1
        qk = np.exp(k * log_q)
        total += np.log1p(-qk)
        q_next = qk * q
        if q_next / ((1.0 - q) * (1.0 - q_next)) < tol:
            break
    return float(np.exp(total))


def divisor_sigma(d):
    """Sum of the positive divisors of ``d``.

    >>> divisor_sigma(28)
    56
    """
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise InvalidInputError(f"divisor_sigma needs an integer >= 1, got {d!r}")
    d = int(d)
    total = 0
    i = 1
    while i * i <= d:
        if d % i == 0:
            total += i
            if i * i != d:
                total += d // i
        i += 1
    return total


def _sigma_table(limit):
    sig = np.zeros(limit + 1, dtype=np.float64)
    for i in range(1, limit + 1):
        sig[i::i] += i
    return sig


def frak_S(s, tol=1e-15):
    """``2 sum_{d>=1} sigma(d) s^(-2d)`` with a tail bound from ``sigma(d) <= d^2``."""
    s = float(s)
    if not s > 1.0:
        raise DomainError(f"the divisor series needs s > 1, got {s}")
    if np.isinf(s):
        return 0.0
    q = s**-2.0
    d = 1
    while True:
        ratio = ((d + 2.0) / (d + 1.0)) ** 2 * q
        if ratio < 1.0 and 2.0 * (d + 1.0) ** 2 * q ** (d + 1) / (1.0 - ratio) < tol:
            break
        d += 1
    sig = _sigma_table(d)[1:]
    powers = q ** np.arange(1, d + 1)
    return float(2.0 * np.sum(sig * powers))


# -- the torus integrals J_k and F(y) ----------------------------------------


def _check_y_open(y):
    y = float(y)
    if not 0.0 <= y < 1.0:
        raise DomainError(f"y must lie in [0, 1), got {y}")
    return y


def quadrature_J(k, y, nodes_per_dim=DEFAULT_NODES):
    """``J_k(y)`` by the tensor trapezoid rule on ``[0, 1)^k``.

    The integrand ``(1-y^2)^(-k) prod_{m<j} |1 - y^2 e^{2 pi i (t_m - t_j)}|^(-2)``
    depends only on angle differences, so one angle is pinned to 0 and the
    remaining ``k - 1`` run over the grid; the pair factor is a lookup in a
    circulant table.
    """
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise InvalidInputError(f"k must be an integer >= 0, got {k!r}")
    k = int(k)
    y = _check_y_open(y)
    nodes = int(nodes_per_dim)
    if nodes < 8:
        raise InvalidInputError(f"nodes_per_dim must be >= 8, got {nodes}")
    if k > QUADRATURE_MAX_K:
        raise SizeError(f"quadrature_J supports k <= {QUADRATURE_MAX_K}, got {k}")
    if y == 0.0:
        return 1.0  # constant integrand
    if float(nodes) ** max(k - 1, 0) > QUADRATURE_BUDGET:
        raise SizeError(f"{nodes}^{k - 1} grid points exceed the budget of {QUADRATURE_BUDGET}")
    y2 = y * y
    prefactor = (1.0 - y2) ** -k
    if k <= 1:
        return prefactor
    pair = 1.0 / np.abs(1.0 - y2 * np.exp(2j * np.pi * np.arange(nodes) / nodes)) ** 2
    free = k - 1
    # the last free index is swept in a Python loop to bound memory
    idx = np.indices((nodes,) * (free - 1)).reshape(free - 1, -1) if free > 1 else np.zeros((0, 1), int)
    base = np.ones(idx.shape[1])
    for a in range(free - 1):
        base *= pair[idx[a] % nodes]
        for b in range(a + 1, free - 1):
            base *= pair[(idx[a] - idx[b]) % nodes]
    total = 0.0
    for last in range(nodes):
        w = base * pair[last]
        for a in range(free - 1):
            w = w * pair[(idx[a] - last) % nodes]
        total += w.sum()
    return prefactor * total / float(nodes) ** free


def auto_nodes(k, y, floor=16, target=1e-14):
    """Even node count for ``J_k(y)`` inside ``F``.

    The trapezoid error decays like ``N^(k-1) y^(2N)`` relative to ``J_k``;
    the count is the smallest one pushing that proxy below
    ``target * k! (k+1)!`` so each weighted contribution is good to about
    ``target``, capped by the grid budget.
    """
    y2 = float(y) ** 2
    if y2 == 0.0 or k <= 1:
        return floor
    goal = log(target) + lgamma(k + 1) + lgamma(k + 2)
    cap = int(QUADRATURE_BUDGET ** (1.0 / (k - 1))) // 2 * 2
    n = floor
    while (k - 1) * log(n) + n * log(y2) >= goal and n + 2 <= cap:
        n += 2
    return n


def sign_factor(k):
    return -1 if (k * (k + 1) // 2) % 2 else 1


@dataclass(frozen=True)
class FValue:
    y: float
    value: float
    contributions: tuple
    truncation_k: int
    tail_estimate: float
    j_values: tuple = ()
    method: str = "quadrature"
    cross_checked: tuple = ()
    series_values: dict = field(default_factory=dict)
    nodes: tuple = ()


def eval_F(y, k_max=DEFAULT_K_MAX, method="quadrature", nodes=None):
    """Partial sum ``sum_{k<=k_max} (-1)^(k(k+1)/2) J_k(y) / (k! (k+1)!)``.

    ``method='both'`` evaluates every ``J_k`` by quadrature and, for each
    ``k`` whose series cost fits ``SERIES_BUDGET``, also by the Schur series;
    a gap above ``1e-7`` raises CrossValidationError. Terms too expensive for
    the series are listed as quadrature-only (absent from ``cross_checked``).
    """
    y = _check_y_open(y)
    if method not in ("quadrature", "series", "both"):
        raise InvalidInputError(f"method must be quadrature, series or both, got {method!r}")
    k_max = int(k_max)
    if k_max < 0:
        raise InvalidInputError("k_max must be >= 0")
    j_values = []
    node_counts = []
    series_values = {}
    checked = []
    for k in range(k_max + 1):
        if method == "series":
            jk = cauchy_series_J(k, y).value
        else:
            n_k = int(nodes) if nodes is not None else auto_nodes(k, y)
            node_counts.append(n_k)
            jk = quadrature_J(k, y, n_k)
            if method == "both" and series_cost(k, y) <= SERIES_BUDGET:
                sk = cauchy_series_J(k, y).value
                series_values[k] = sk
                checked.append(k)
                if abs(sk - jk) > CROSS_TOL:
                    raise CrossValidationError(
                        f"J_{k}({y}) disagrees: quadrature {jk!r} vs series {sk!r}",
                        values={"k": k, "quadrature": jk, "series": sk},
                    )
        j_values.append(jk)
    contributions = tuple(
        sign_factor(k) * j_values[k] / (factorial(k) * factorial(k + 1)) for k in range(k_max + 1)
    )
    tail = 0.0
    if k_max >= 1 and contributions[-2] != 0.0:
        r = abs(contributions[-1] / contributions[-2])
        tail = abs(contributions[-1]) * r / (1.0 - r) if r < 1.0 else float("inf")
    return FValue(
        y=y,
        value=float(sum(contributions)),
        contributions=contributions,
        truncation_k=k_max,
        tail_estimate=tail,
        j_values=tuple(j_values),
        method=method,
        cross_checked=tuple(checked),
        series_values=series_values,
        nodes=tuple(node_counts),
    )


# -- Monte Carlo estimators -------------------------------------------------


@dataclass(frozen=True)
class LdpEstimate:
    n: int
    y: float
    num_samples: int
    p_hat: float
    std_error: float
    log_p_hat: float
    log_rescaled: float
    rescaled: float
    rescaled_std_error: float
    sampler: str


def ldp_estimator(n, y, num_samples, rng, sampler="dpp", threads=None):
    """Estimate ``P(rho_n <= y)`` as ``y^(n(n+1)) E[eta^-(n+1)]`` over the ensemble.

    The root density of the Kac polynomial, read as a density of labelled
    roots, is ``|Delta(z)|^2 / (pi^n (sum_k |e_k|^2)^(n+1))``; rescaling the
    disk ``D(y)`` onto ``D`` turns it into the ensemble law times that weight.
    ``eta >= 1`` so each weight is at most 1, which is asserted.
    The mean is a log-sum-exp, and ``rescaled = n^(n+1) y^(-n(n+1)) p_hat``
    never forms the huge powers.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidInputError(f"n must be an integer >= 1, got {n!r}")
    n = int(n)
    y = float(y)
    if not 0.0 < y < 1.0:
        raise DomainError(f"left deviations need 0 < y < 1, got {y}")
    num_samples = int(num_samples)
    if num_samples < 100:
        raise InvalidInputError(f"ldp_estimator needs at least 100 samples, got {num_samples}")
    if sampler not in SAMPLERS:
        raise InvalidInputError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
    pts = ensemble_points(n, num_samples, rng, sampler=sampler, threads=threads)
    et = eta_batch(pts, y)
    log_w = -(n + 1) * np.log(et)
    if np.any(log_w > 1e-9):
        raise AssertionError("a weight exceeded 1, which contradicts eta >= 1")
    log_mean = float(logsumexp(log_w) - log(num_samples))
    rel = np.exp(log_w - log_mean)
    rel_se = float(np.std(rel, ddof=1) / np.sqrt(num_samples))
    log_p = n * (n + 1) * log(y) + log_mean
    log_rescaled = (n + 1) * log(n) + log_mean
    p_hat = float(np.exp(log_p))
    rescaled = float(np.exp(log_rescaled))
    return LdpEstimate(
        n=n,
        y=y,
        num_samples=num_samples,
        p_hat=p_hat,
        std_error=p_hat * rel_se,
        log_p_hat=log_p,
        log_rescaled=log_rescaled,
        rescaled=rescaled,
        rescaled_std_error=rescaled * rel_se,
        sampler=sampler,
    )


def direct_mc_prob(n, y, num_samples, rng, threads=None, budget=DIRECT_MC_BUDGET):
    """Fraction of Kac polynomials of degree ``n`` whose roots all lie in ``|z| <= y``."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidInputError(f"n must be an integer >= 1, got {n!r}")
    n, num_samples, y = int(n), int(num_samples), float(y)
    if num_samples < 1:
        raise InvalidInputError("num_samples must be >= 1")
    if n * n * num_samples > budget:
        raise SizeError(f"n^2 * samples = {n * n * num_samples} exceeds the budget {budget}")
    rho = max_modulus_samples(n, num_samples, rng, threads=threads)
    p = float(np.mean(rho <= y))
    return p, float(np.sqrt(p * (1.0 - p) / num_samples))


def _moment_points(u):
    pts = as_vector(u)
    if pts.size == 0:
        raise InvalidInputError("need at least one evaluation point")
    return pts


def moment_formula(n, u):
    """``E prod_l |det(u_l - M)|^2`` over the truncated ensemble of size ``n``.

    Equal to ``det[g_{n+k}(u_i conj u_j)] / |Delta(u)|^2 * n! / (n+k)!``. The
    ratio has a removable singularity when two ``u`` coincide; coincident
    points are rejected and nearly coincident ones lose digits to
    cancellation.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidInputError(f"n must be an integer >= 1, got {n!r}")
    n = int(n)
    pts = _moment_points(u)
    k = pts.size
    vdm = vandermonde_abs2(pts)
    if vdm == 0.0:
        raise InvalidInputError("moment_formula needs pairwise distinct points")
    gram = g_eval(KernelG(n + k), np.outer(pts, pts.conj()))
    det = determinant(np.atleast_2d(gram)).real
    return float(det / vdm * np.exp(lgamma(n + 1) - lgamma(n + k + 1)))


def mc_moment(n, u, num_samples, rng, sampler="dpp", threads=None):
    """Monte Carlo mean of ``prod_l prod_j |u_l - lambda_j|^2`` with its standard error."""
    pts = _moment_points(u)
    num_samples = int(num_samples)
    if num_samples < 2:
        raise InvalidInputError("mc_moment needs at least 2 samples")
    lam = ensemble_points(n, num_samples, rng, sampler=sampler, threads=threads)
    vals = np.prod(np.abs(pts[None, :, None] - lam[:, None, :]) ** 2, axis=(1, 2))
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(num_samples))
