"""Numeric Frobenius structure on the unfolding space of z^{n+1}.

A point is given by the coefficients a_1..a_n of

    p(z) = z^{n+1} + a_1 z^{n-1} + ... + a_n

together with an ordering of the critical points rho_i.  Canonical
coordinates are the critical values u^i = p(rho_i); the metric is
g = sum_i (du^i)^2 / p''(rho_i) with potential eta = -sum_i rho_i^2 / (2(n-1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from fforge.algebra import COMPLEX, PointAlgebra, diagonal_algebra

ROOT_RESIDUAL = 1e-12
SEPARATION = 1e-8
CUT_MARGIN = 1e-4
DEFAULT_FD_STEP = 3e-5
# minimum critical-point spacing of sampled charts
SAFE_SEPARATION = 0.6
# residuals below this are roundoff, not truncation error
CONVERGENCE_FLOOR = 1e-12


class SaitoError(ValueError):
    pass


def _poly(n: int, a) -> np.ndarray:
    """Coefficients of p, highest degree first."""
    return np.concatenate([[1.0, 0.0], np.asarray(a, dtype=complex)])


@dataclass(frozen=True, eq=False)
class SaitoChart:
    n: int
    a: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    jacobian: np.ndarray
    scale: float

    @property
    def p(self) -> np.ndarray:
        return _poly(self.n, self.a)

    def p2(self) -> np.ndarray:
        """p''(rho_i)."""
        return np.polyval(np.polyder(self.p, 2), self.rho)

    def jacobian_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.jacobian)


def _critical_points(n: int, a: np.ndarray) -> np.ndarray:
    p = _poly(n, a)
    dp = np.polyder(p)
    monic = dp / dp[0]
    comp = np.zeros((n, n), dtype=complex)
    comp[0, :] = -monic[1:]
    if n > 1:
        comp[1:, :-1] = np.eye(n - 1)
    roots = np.linalg.eigvals(comp)
    d2p = np.polyder(dp)
    size = max(1.0, float(np.max(np.abs(roots))))
    for _ in range(8):
        curv = np.polyval(d2p, roots)
        if np.any(curv == 0):
            break
        step = np.polyval(dp, roots) / curv
        roots = roots - step
        if np.max(np.abs(step)) <= 4e-16 * size:
            break
    return roots


def build_chart(n: int, a, ordering_seed: int | None = None) -> SaitoChart:
    """Chart at coefficients ``a``; roots sorted by (re, im), then permuted
    by ``ordering_seed`` to pick a sheet of the covering."""
    if n < 2:
        raise SaitoError("n must be at least 2")
    a = np.asarray(a, dtype=complex)
    if a.shape != (n,):
        raise SaitoError(f"expected {n} coefficients")
    if not np.all(np.isfinite(a)):
        raise SaitoError("non-finite coefficient")
    scale = max(1.0, float(np.max(np.abs(a))))
    rho = _critical_points(n, a)
    rho = rho[np.lexsort((rho.imag, rho.real))]
    if ordering_seed is not None:
        rho = rho[np.random.default_rng(ordering_seed).permutation(n)]
    return _finish_chart(n, a, rho, scale)


def _finish_chart(n, a, rho, scale) -> SaitoChart:
    sep = min(abs(rho[i] - rho[j]) for i in range(n) for j in range(i))
    if not np.all(np.isfinite(rho)) or sep <= SEPARATION * scale:
        raise SaitoError("multiple root region")
    p = _poly(n, a)
    resid = np.max(np.abs(np.polyval(np.polyder(p), rho)))
    if resid >= ROOT_RESIDUAL * scale:
        raise SaitoError(f"root refinement failed (|p'| = {resid:.2e})")
    u = np.polyval(p, rho)
    jac = np.array([[r ** (n - j) for j in range(1, n + 1)] for r in rho])
    return SaitoChart(n, a, rho, u, jac, scale)


def tracked_chart(base: SaitoChart, a) -> SaitoChart:
    """Chart at nearby coefficients with roots matched to ``base``'s order."""
    a = np.asarray(a, dtype=complex)
    rho = _critical_points(base.n, a)
    cost = np.abs(base.rho[:, None] - rho[None, :])
    _, cols = linear_sum_assignment(cost)
    return _finish_chart(base.n, a, rho[cols], base.scale)


# -- metric ------------------------------------------------------------------


@dataclass
class SaitoMetricData:
    g_diag: np.ndarray
    eta: complex
    eta_grad_u: np.ndarray
    eta_grad_a: np.ndarray


def _eta(chart: SaitoChart) -> complex:
    return complex(-np.sum(chart.rho**2) / (2 * (chart.n - 1)))


def _eta_grad_a(chart: SaitoChart) -> np.ndarray:
    n = chart.n
    p2 = chart.p2()
    grad = np.zeros(n, dtype=complex)
    for j in range(1, n + 1):
        drho = -(n - j) * chart.rho ** (n - j - 1) / p2 if n - j > 0 else np.zeros(n)
        grad[j - 1] = -np.sum(chart.rho * drho) / (n - 1)
    return grad


def eta_grad_u(chart: SaitoChart) -> np.ndarray:
    """eta_i = d eta / d u^i via the chain rule through J."""
    return np.linalg.solve(chart.jacobian.T, _eta_grad_a(chart))


def metric_data(chart: SaitoChart) -> SaitoMetricData:
    p2 = chart.p2()
    if np.min(np.abs(p2)) < 1e-12 * chart.scale:
        raise SaitoError("degenerate metric")
    return SaitoMetricData(1 / p2, _eta(chart), eta_grad_u(chart), _eta_grad_a(chart))


# -- finite differences ------------------------------------------------------


def _fd_grad_a(f, chart: SaitoChart, h: float) -> np.ndarray:
    """Central differences of f(chart) in each a_j; f returns an array."""
    cols = []
    for j in range(chart.n):
        step = np.zeros(chart.n, dtype=complex)
        step[j] = h
        fp = f(tracked_chart(chart, chart.a + step))
        fm = f(tracked_chart(chart, chart.a - step))
        cols.append((fp - fm) / (2 * h))
    return np.stack(cols, axis=-1)


def _to_u(grad_a: np.ndarray, chart: SaitoChart) -> np.ndarray:
    """Convert the last axis from d/da_j to d/du^k."""
    return grad_a @ chart.jacobian_inverse()


def eta_hessian_u(chart: SaitoChart, h: float) -> np.ndarray:
    """eta_ij by central differences of the analytic eta_i."""
    return _to_u(_fd_grad_a(eta_grad_u, chart, h), chart)


def _sqrt_eta(chart: SaitoChart) -> np.ndarray:
    return np.sqrt(eta_grad_u(chart))


def rotation_coefficients(chart: SaitoChart, h: float) -> np.ndarray:
    """gamma_ij = eta_ij / (2 sqrt(eta_i) sqrt(eta_j)) with principal roots."""
    s = _sqrt_eta(chart)
    return eta_hessian_u(chart, h) / (2 * np.outer(s, s))


def _cut_distance(chart: SaitoChart) -> float:
    """Smallest angular distance of any eta_i from the negative real axis."""
    eta_i = eta_grad_u(chart)
    return float(np.min(math.pi - np.abs(np.angle(eta_i))))


@dataclass
class DarbouxEgoroffReport:
    rotation: float  # max |e_k gamma_ij - gamma_ik gamma_kj|, i, j, k distinct
    identity: float  # max |e gamma_ij|
    e_eta: complex  # e eta = sum_i eta_i
    fd_step: float

    def as_dict(self) -> dict:
        return {"rotation": self.rotation, "e_gamma": self.identity,
                "e_eta_abs": abs(self.e_eta), "fd_step": self.fd_step}


def darboux_egoroff_residual(chart: SaitoChart, fd_step: float = DEFAULT_FD_STEP) -> DarbouxEgoroffReport:
    n = chart.n
    h = fd_step * chart.scale
    if h <= 1e-14 * chart.scale:
        raise SaitoError("finite-difference step underflow")
    if _cut_distance(chart) < max(CUT_MARGIN, 10 * fd_step):
        raise SaitoError("eta_i too close to the branch cut")
    if np.min(np.abs(eta_grad_u(chart))) < 1e-8:
        raise SaitoError("eta_i near zero")
    gamma = rotation_coefficients(chart, h)
    # dgamma[i, j, k] = e_k gamma_ij
    dgamma = _to_u(_fd_grad_a(lambda c: rotation_coefficients(c, h), chart, h), chart)
    rot = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if len({i, j, k}) == 3:
                    rot = max(rot, abs(dgamma[i, j, k] - gamma[i, k] * gamma[k, j]))
    ident = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                ident = max(ident, abs(np.sum(dgamma[i, j, :])))
    return DarbouxEgoroffReport(rot, ident, complex(np.sum(eta_grad_u(chart))), fd_step)


def e_flow_variation(chart: SaitoChart, steps=(-0.5, -0.25, 0.25, 0.5)) -> float:
    """Variation of e eta along the line a_n -> a_n + t (the flow of e)."""
    base = np.sum(eta_grad_u(chart))
    worst = 0.0
    for t in steps:
        a = chart.a.copy()
        a[-1] += t * chart.scale
        other = tracked_chart(chart, a)
        worst = max(worst, abs(np.sum(eta_grad_u(other)) - base))
    return float(worst)


# -- Euler field -------------------------------------------------------------


@dataclass
class EulerConsistencyReport:
    euler: float  # max_j |E(a_j) via u - (j+1) a_j / (n+1)|
    flat_identity: float  # max_j |sum_i da_j/du^i - [j == n]|
    e_eta: complex
    euler_eta: complex  # E eta - (2/(n+1)) eta

    def as_dict(self) -> dict:
        return {"euler": self.euler, "flat_identity": self.flat_identity,
                "e_eta_abs": abs(self.e_eta), "euler_eta_abs": abs(self.euler_eta)}


def euler_consistency(chart: SaitoChart) -> EulerConsistencyReport:
    n = chart.n
    jinv = chart.jacobian_inverse()  # jinv[j, i] = d a_j / d u^i
    left = jinv @ chart.u
    right = np.array([(j + 1) * chart.a[j - 1] / (n + 1) for j in range(1, n + 1)])
    ones = jinv @ np.ones(n)
    target = np.zeros(n)
    target[-1] = 1
    eta_i = eta_grad_u(chart)
    e_eta = np.sum(eta_i)
    big_e_eta = np.sum(chart.u * eta_i)
    weight = 2 / (n + 1)
    return EulerConsistencyReport(
        float(np.max(np.abs(left - right))),
        float(np.max(np.abs(ones - target))),
        complex(e_eta),
        complex(big_e_eta - weight * _eta(chart)),
    )


# -- pointwise algebra -------------------------------------------------------


@dataclass
class PointwiseFrobenius:
    algebra: PointAlgebra
    pairing: np.ndarray  # diagonal entries eta_i

    def invariance_defect(self) -> float:
        """max |g(X o Y, Z) - g(X, Y o Z)| over basis triples."""
        s = self.algebra.structure
        g = np.diag(self.pairing)
        left = np.einsum("abe,ec->abc", s, g)
        right = np.einsum("bce,ae->abc", s, g)
        return float(np.max(np.abs(left - right)))


def pointwise_frobenius(chart: SaitoChart) -> PointwiseFrobenius:
    alg = diagonal_algebra(chart.n, COMPLEX)
    pf = PointwiseFrobenius(alg, eta_grad_u(chart))
    if pf.invariance_defect() > 1e-12:
        raise SaitoError("invariance of the pairing fails")
    return pf


# -- sampling ----------------------------------------------------------------


def sample_chart(n: int, rng: np.random.Generator, min_separation: float = SAFE_SEPARATION,
                 fd_step: float = DEFAULT_FD_STEP, max_tries: int = 1000) -> SaitoChart:
    """Random chart in the safe region: well separated critical points and
    every eta_i away from the branch cut of the square root."""
    for _ in range(max_tries):
        a = rng.normal(size=n) + 1j * rng.normal(size=n)
        try:
            chart = build_chart(n, a)
        except SaitoError:
            continue
        sep = min(abs(chart.rho[i] - chart.rho[j]) for i in range(n) for j in range(i))
        if sep < min_separation:
            continue
        if _cut_distance(chart) < max(CUT_MARGIN, 10 * fd_step):
            continue
        if np.min(np.abs(eta_grad_u(chart))) < 1e-3:
            continue
        return chart
    raise SaitoError("could not sample a chart in the safe region")


@dataclass
class AnSweep:
    n: int
    samples: int
    fd_step: float
    max_rotation: float = 0.0
    max_identity: float = 0.0
    max_metric_rel: float = 0.0
    max_euler: float = 0.0
    max_flat_identity: float = 0.0
    max_e_flow: float = 0.0
    max_root_residual: float = 0.0
    convergence_ratios: list = field(default_factory=list)

    def residuals(self) -> dict:
        return {
            "darboux_egoroff_rotation": self.max_rotation,
            "darboux_egoroff_e_gamma": self.max_identity,
            "metric_potential_rel": self.max_metric_rel,
            "euler_consistency": self.max_euler,
            "flat_identity": self.max_flat_identity,
            "e_eta_flow_variation": self.max_e_flow,
            "root_residual": self.max_root_residual,
        }


def sweep(n: int, samples: int, seed: int = 0, fd_step: float = DEFAULT_FD_STEP,
          convergence_steps: tuple[float, float] | None = None) -> AnSweep:
    """Run every check on ``samples`` random charts."""
    rng = np.random.default_rng(seed)
    out = AnSweep(n, samples, fd_step)
    widest = max((fd_step,) + tuple(convergence_steps or ()))
    for _ in range(samples):
        chart = sample_chart(n, rng, fd_step=widest)
        md = metric_data(chart)
        out.max_metric_rel = max(out.max_metric_rel, float(np.max(np.abs(md.eta_grad_u / md.g_diag - 1))))
        de = darboux_egoroff_residual(chart, fd_step)
        out.max_rotation = max(out.max_rotation, de.rotation)
        out.max_identity = max(out.max_identity, de.identity)
        ec = euler_consistency(chart)
        out.max_euler = max(out.max_euler, ec.euler)
        out.max_flat_identity = max(out.max_flat_identity, ec.flat_identity)
        out.max_e_flow = max(out.max_e_flow, e_flow_variation(chart))
        resid = np.max(np.abs(np.polyval(np.polyder(chart.p), chart.rho)))
        out.max_root_residual = max(out.max_root_residual, float(resid / chart.scale))
        if convergence_steps is not None:
            h1, h2 = convergence_steps
            r1 = darboux_egoroff_residual(chart, h1)
            r2 = darboux_egoroff_residual(chart, h2)
            e1 = max(r1.rotation, r1.identity)
            e2 = max(r2.rotation, r2.identity)
            # an exactly quadratic metric (n = 2) leaves nothing to converge
            if e1 > CONVERGENCE_FLOOR:
                out.convergence_ratios.append(e1 / e2 if e2 > 0 else math.inf)
    return out
