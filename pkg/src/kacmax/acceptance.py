"""End-to-end acceptance checks, shared by the test suite and ``kacmax selftest``.

Each criterion runs at full size by default; ``quick=True`` shrinks sample
counts for a fast smoke run (tolerances never change).
"""

from dataclasses import dataclass, field
from math import log

import numpy as np
from scipy.stats import ks_2samp

from .correlations import fredholm_bergman, gap_probability_series, nystrom_eigenvalues, NystromGrid, rho_finite
from .deviations import (
    direct_mc_prob,
    eval_F,
    ldp_estimator,
    limit_cdf,
    mc_moment,
    moment_formula,
    quadrature_J,
)
from .ensembles import ensemble_points
from .linalg import elementary_symmetric
from .polyroots import empirical_cdf, find_roots, find_roots_batch, max_modulus_samples, sample_kac_batch
from .streams import RngStream
from .symfunc import cauchy_series_J

SEED = 20240611


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)

    def line(self):
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _n1_exact_law(quick):
    mc = 10**5 if quick else 10**6
    ldp_n = 10**4 if quick else 10**5
    rows = []
    ok = True
    for i, y in enumerate((0.3, 0.5, 0.8)):
        exact = y * y / (1 + y * y)
        p, se = direct_mc_prob(1, y, mc, RngStream(SEED, 100 + i))
        est = ldp_estimator(1, y, ldp_n, RngStream(SEED, 200 + i))
        z_mc = abs(p - exact) / se
        z_ldp = abs(est.p_hat - exact) / est.std_error
        ok &= z_mc <= 3 and z_ldp <= 3
        rows.append((y, z_mc, z_ldp))
    detail = ", ".join(f"y={y}: z_direct={a:.2f} z_ldp={b:.2f}" for y, a, b in rows)
    return ok, detail, {"z_scores": rows}


def _fluctuation_law(quick):
    n, count = (64, 500) if quick else (256, 2000)
    rho = max_modulus_samples(n, count, RngStream(SEED, 2))
    grid = 1.05 + 0.01 * np.arange(196)
    emp = np.array([p for _, p in empirical_cdf(rho, grid)])
    lim = np.array([limit_cdf(y) for y in grid])
    sup = float(np.max(np.abs(emp - lim)))
    return sup <= 0.05, f"n={n}, {count} samples, sup |empirical - limit| = {sup:.4f} (tol 0.05)", {"sup": sup}


def _f_cross_validation(quick):
    worst = 0.0
    for k in (1, 2, 3):
        for y in (0.3, 0.5, 0.6):
            worst = max(worst, abs(quadrature_J(k, y, 64) - cauchy_series_J(k, y).value))
    ok = worst <= 1e-7
    values = {}
    for y in (0.3, 0.5, 0.6):
        f = eval_F(y, 6, "both")
        values[y] = f.value
    return ok, f"max |quadrature - series| = {worst:.2e} (tol 1e-7); eval_F both consistent at y=0.3,0.5,0.6", {
        "worst": worst,
        "F": values,
    }


def _precise_ldp(quick):
    y = 0.6
    samples = 10**4 if quick else 10**5
    target = eval_F(y).value
    errs = {}
    for n in (10, 20, 40):
        est = ldp_estimator(n, y, samples, RngStream(SEED, 400 + n))
        errs[n] = abs(est.rescaled - target) / abs(target)
    ok = errs[40] <= 0.15 and errs[40] < errs[10]
    detail = f"F(0.6)={target:.6f}; relative errors " + ", ".join(f"n={n}: {e:.3e}" for n, e in errs.items())
    return ok, detail, {"F": target, "relative_errors": errs}


def _ldp_rate(quick):
    samples = 2000 if quick else 10**4
    worst = []
    ok = True
    for n in (16, 32):
        for y in (0.5, 0.7):
            est = ldp_estimator(n, y, samples, RngStream(SEED, 500 + n))
            gap = abs(est.log_p_hat / n**2 + log(1 / y))
            bound = 3 * log(n) / n
            ok &= gap <= bound
            worst.append((n, y, gap, bound))
    detail = ", ".join(f"n={n} y={y}: {g:.3f}<={b:.3f}" for n, y, g, b in worst)
    return ok, detail, {"rows": worst}


def _moment_formula(quick):
    samples = 10**4 if quick else 10**5
    cases = ([1.3], [1.6], [1.3, 1.6j])
    ok = True
    parts = []
    for i, u in enumerate(cases):
        exact = moment_formula(5, u)
        mc, se = mc_moment(5, u, samples, RngStream(SEED, 600 + i))
        z = abs(mc - exact) / se
        ok &= z <= 3
        parts.append(f"u={u}: z={z:.2f}")
    worst_n1 = 0.0
    for x in (0.0, 0.3, 1.69, 2.56, 4.0):
        u = np.sqrt(x) * np.exp(0.4j)
        worst_n1 = max(worst_n1, abs(moment_formula(1, [u]) / ((1 + 2 * x) / 2) - 1))
    ok &= worst_n1 <= 1e-12
    parts.append(f"n=1 identity rel err {worst_n1:.1e}")
    return ok, "; ".join(parts), {"n1_error": worst_n1}


def _fredholm(quick):
    worst_det = worst_eig = 0.0
    for t in (0.3, 0.5, 0.7):
        grid = NystromGrid.build(t, 64, 128)
        exact = float(np.prod(1 - t ** (2 * np.arange(1, 202))))
        worst_det = max(worst_det, abs(fredholm_bergman(t, grid) - exact))
        eig = nystrom_eigenvalues(t, grid)[:3]
        worst_eig = max(worst_eig, float(np.max(np.abs(eig - t ** np.array([2.0, 4.0, 6.0])))))
    ok = worst_det <= 1e-6 and worst_eig <= 1e-8
    return ok, f"det error {worst_det:.1e} (tol 1e-6), eigenvalue error {worst_eig:.1e} (tol 1e-8)", {
        "det": worst_det,
        "eig": worst_eig,
    }


def radial_cdf(n, r):
    """CDF of the modulus of a uniformly chosen ensemble point: ``(1/n) sum_{j<n} r^(2j+2)``."""
    r = np.asarray(r, dtype=float)
    return sum(r ** (2 * j + 2) for j in range(n)) / n


def histogram_distance(radii, n, bins=10):
    """Largest gap between empirical and exact probability mass over equal-width radial bins."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(radii, bins=edges)
    return float(np.max(np.abs(counts / len(radii) - np.diff(radial_cdf(n, edges)))))


def _sampler_equivalence(quick):
    n = 4
    count = 2000 if quick else 10**4
    trunc = ensemble_points(n, count, RngStream(SEED, 801), "truncation")
    dpp = ensemble_points(n, count, RngStream(SEED, 802), "dpp")
    ks = float(ks_2samp(np.abs(trunc).ravel(), np.abs(dpp).ravel()).statistic)
    gen = RngStream(SEED, 803).generator()
    dist = []
    for pts in (trunc, dpp):
        pick = pts[np.arange(len(pts)), gen.integers(0, n, len(pts))]
        dist.append(histogram_distance(np.abs(pick), n))
    ok = ks <= 0.03 and max(dist) <= 0.05
    return ok, f"radial KS {ks:.4f} (tol 0.03), histogram sup {max(dist):.4f} (tol 0.05)", {"ks": ks, "hist": dist}


def _correlation_oracle(quick):
    gen = RngStream(SEED, 9).generator()
    z = 2.0 * (gen.random(20) - 0.5) + 2j * (gen.random(20) - 0.5)
    worst = max(abs(rho_finite([w], 1) - 1 / (np.pi * (1 + abs(w) ** 2) ** 2)) for w in z)
    gap = gap_probability_series(1.5, "limit", 4, 50_000 if quick else 200_000, RngStream(SEED, 901))
    exact = limit_cdf(1.5)
    rel = abs(gap.value - exact) / exact
    ok = worst <= 1e-12 and rel <= 0.02
    return ok, f"rho_1 error {worst:.1e} (tol 1e-12), gap series {gap.value:.5f} vs {exact:.5f} rel {rel:.4f}", {
        "rho": worst,
        "gap": rel,
    }


def _root_finder(quick):
    count = 20 if quick else 100
    n = 256
    a = sample_kac_batch(n, count, RngStream(SEED, 10).generator())
    roots, _, _ = find_roots_batch(a)
    worst = 0.0
    for coeffs, r in zip(a, roots):
        e = elementary_symmetric(r)
        target = (-1.0) ** np.arange(n + 1) * coeffs[::-1] / coeffs[-1]
        worst = max(worst, float(np.max(np.abs(e - target)) / np.max(np.abs(target))))
    unit = find_roots(np.r_[-1.0, np.zeros(15), 1.0]).roots
    exact = np.exp(2j * np.pi * np.arange(16) / 16)
    miss = float(max(np.min(np.abs(unit - w)) for w in exact))
    ok = worst <= 1e-6 and miss <= 1e-10
    return ok, f"Vieta relative residual {worst:.1e} (tol 1e-6), z^16-1 root error {miss:.1e} (tol 1e-10)", {
        "vieta": worst,
        "unit": miss,
    }


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    check: object
    slow: bool = False

    def run(self, quick=False):
        passed, detail, values = self.check(quick)
        return CriterionResult(self.number, self.name, bool(passed), detail, values)


CRITERIA = (
    Criterion(1, "n=1 exact law", _n1_exact_law),
    Criterion(2, "fluctuation limit law", _fluctuation_law, slow=True),
    Criterion(3, "F(y) quadrature vs series", _f_cross_validation),
    Criterion(4, "precise left deviations", _precise_ldp, slow=True),
    Criterion(5, "left deviation rate", _ldp_rate, slow=True),
    Criterion(6, "moment formula", _moment_formula),
    Criterion(7, "Fredholm determinant", _fredholm),
    Criterion(8, "sampler equivalence", _sampler_equivalence),
    Criterion(9, "correlation oracle", _correlation_oracle),
    Criterion(10, "root finder", _root_finder),
)


def run_all(quick=False, only=None):
    selected = [c for c in CRITERIA if only is None or c.number in only]
    return [c.run(quick) for c in selected]
