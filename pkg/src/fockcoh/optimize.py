"""Parameter sweeps over the two-factor states and the constrained entropy maximum.

``verify_kkt`` checks the sector weights of the maximal total-coherence state
two ways that share nothing but the objective:

* the exponential-family stationarity condition q_k ∝ (k+1) e^{lam k}, with
  ``lam`` found by bracketing root search on the mean-number constraint;
* a generic feasible ascent from random interior starts.  Each step is the
  entropy gradient projected onto the two equality constraints in the metric
  of the objective's Hessian, followed by backtracking that keeps q > 0 and
  enforces monotone ascent.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp

from .coherence import sector_coherence
from .errors import InvalidArgumentsError
from .states import phi_sector_weights, psi

MAX_SWEEP_N = 4000
DEFAULT_THETA_POINTS = 33


@dataclass(frozen=True)
class GridPoint:
    theta: float
    m: int
    coherence_bits: float
    rate: float


@dataclass
class SweepResult:
    N: int
    grid: list[GridPoint]
    argmax: tuple[float, int]
    refined_theta: float | None = None

    def best(self) -> GridPoint:
        return max(self.grid, key=lambda g: g.coherence_bits)


def theta_grid(points: int = DEFAULT_THETA_POINTS) -> np.ndarray:
    return np.linspace(0.0, math.pi / 4, points)


def psi_coherence(theta: float, m: int, N: int) -> float:
    return sector_coherence(psi(theta, m, N), N)


def sweep_psi(N: int, thetas=None, m_values=None, refine: bool = False, threads: int = 1) -> SweepResult:
    """Evaluate coherence and MC_N rate over a (theta, m) grid."""
    if N < 1 or N > MAX_SWEEP_N:
        raise InvalidArgumentsError(f"N must lie in [1, {MAX_SWEEP_N}]")
    thetas = theta_grid() if thetas is None else np.asarray(thetas, dtype=float)
    m_values = range(N // 2 + 1) if m_values is None else list(m_values)
    if len(thetas) == 0 or len(m_values) == 0:
        raise InvalidArgumentsError("grids must be nonempty")
    denom = math.log2(N + 1)
    pairs = [(float(t), int(m)) for m in m_values for t in thetas]

    def point(tm):
        c = psi_coherence(tm[0], tm[1], N)
        return GridPoint(tm[0], tm[1], c, c / denom)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            grid = list(pool.map(point, pairs))
    else:
        grid = [point(tm) for tm in pairs]
    best = max(grid, key=lambda g: g.coherence_bits)
    result = SweepResult(N, grid, (best.theta, best.m))
    if refine:
        result.refined_theta = refine_theta(N, best.m, best.theta, thetas)
    return result


def refine_theta(N: int, m: int, theta0: float, thetas: np.ndarray, xatol: float = 1e-4) -> float:
    """Bounded scalar maximization of coherence between the grid neighbours of ``theta0``."""
    ts = np.sort(np.asarray(thetas))
    i = int(np.argmin(np.abs(ts - theta0)))
    lo = ts[max(i - 1, 0)]
    hi = min(ts[min(i + 1, len(ts) - 1)], math.pi / 4)
    if hi <= lo:
        return float(theta0)
    res = minimize_scalar(lambda t: -psi_coherence(t, m, N), bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol})
    # keep the grid point when it beats the interior candidate (boundary maxima)
    return float(res.x) if -res.fun > psi_coherence(theta0, m, N) else float(theta0)


# constrained entropy maximization


def _objective(q: np.ndarray, log_deg: np.ndarray) -> float:
    """Total coherence in nats of sector weights q with uniform sectors."""
    nz = q > 0
    return float(-np.sum(q[nz] * (np.log(q[nz]) - log_deg[nz])))


def fixed_point_solution(N: float, K_max: int) -> tuple[np.ndarray, float]:
    """q_k ∝ (k+1) e^{lam k} on {0..K_max} with lam set by sum k q_k = N."""
    k = np.arange(K_max + 1)
    log_deg = np.log(k + 1.0)

    def weights(lam):
        lw = log_deg + lam * k
        return np.exp(lw - logsumexp(lw))

    def gap(lam):
        return float(weights(lam) @ k) - N

    lo, hi = -50.0, 0.0
    while gap(hi) < 0:
        hi += 1.0
    lam = brentq(gap, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return weights(lam), lam


def _random_feasible_start(N: float, K_max: int, rng: np.random.Generator) -> np.ndarray:
    """Random positive weights tilted so the mean particle number is N."""
    k = np.arange(K_max + 1)
    logw = np.log(rng.uniform(0.2, 1.0, K_max + 1))

    def tilted(beta):
        lw = logw + beta * k
        return np.exp(lw - logsumexp(lw))

    beta = brentq(lambda b: float(tilted(b) @ k) - N, -60.0, 60.0, xtol=1e-14)
    return tilted(beta)


@dataclass
class AscentRun:
    weights: np.ndarray
    multiplier: float
    objective_history: list[float] = field(default_factory=list)
    iterations: int = 0

    @property
    def monotone(self) -> bool:
        h = self.objective_history
        return all(b >= a - 1e-13 for a, b in zip(h, h[1:]))


def projected_ascent(N: float, K_max: int, q0: np.ndarray, max_iter: int = 500, tol: float = 1e-14) -> AscentRun:
    """Maximize the objective on {q >= 0, sum q = 1, sum k q = N} from feasible ``q0``."""
    k = np.arange(K_max + 1, dtype=float)
    log_deg = np.log(k + 1.0)
    A = np.vstack([np.ones_like(k), k])
    q = q0.copy()
    f = _objective(q, log_deg)
    history = [f]
    mult = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        g = -np.log(q) - 1.0 + log_deg
        # Hessian metric D = diag(q): step = D (g - A^T y), with A step = 0
        AD = A * q
        y = np.linalg.solve(AD @ A.T, AD @ g)
        step = q * (g - A.T @ y)
        # stationarity g = y0 + y1 k  <=>  q ∝ (k+1) e^{-y1 k}
        mult = -float(y[1])
        decrement = float(g @ step)
        if decrement < tol:
            break
        t = 1.0
        neg = step < 0
        if np.any(neg):
            t = min(1.0, 0.99 * float(np.min(-q[neg] / step[neg])))
        while True:
            cand = q + t * step
            fc = _objective(cand, log_deg)
            if np.all(cand > 0) and fc >= f + 1e-4 * t * decrement:
                break
            t *= 0.5
            if t < 1e-20:
                break
        if t < 1e-20:
            break
        # re-impose the equality constraints against rounding drift
        cand = cand / cand.sum()
        q, f = cand, _objective(cand, log_deg)
        history.append(f)
    return AscentRun(q, mult, history, it)


@dataclass
class KKTReport:
    N: float
    K_max: int
    closed_form: np.ndarray
    fixed_point: np.ndarray
    lambda_fixed_point: float
    lambda_ascent: float
    lambda_closed_form: float
    ascent_runs: list[AscentRun]
    linf_fixed_point: float
    linf_ascent: float
    linf_between_solvers: float
    tail_mass: float

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "K_max": self.K_max,
            "lambda_closed_form": self.lambda_closed_form,
            "lambda_fixed_point": self.lambda_fixed_point,
            "lambda_ascent": self.lambda_ascent,
            "linf_fixed_point": self.linf_fixed_point,
            "linf_ascent": self.linf_ascent,
            "linf_between_solvers": self.linf_between_solvers,
            "ascent_monotone": all(r.monotone for r in self.ascent_runs),
            "ascent_iterations": [r.iterations for r in self.ascent_runs],
            "tail_mass": self.tail_mass,
        }


def verify_kkt(N: float, K_max: int = 500, tol: float = 1e-6, starts: int = 5, seed: int = 0) -> KKTReport:
    """Compare both numerical maximizers with the closed-form sector weights."""
    if N < 0:
        raise InvalidArgumentsError("mean particle number must be nonnegative")
    closed = np.zeros(K_max + 1)
    if N == 0:
        closed[0] = 1.0
        point = closed.copy()
        return KKTReport(N, K_max, closed, point, -math.inf, -math.inf, -math.inf,
                         [AscentRun(point, -math.inf, [0.0])], 0.0, 0.0, 0.0, 0.0)
    w, tail = phi_sector_weights(N)
    if tail >= tol:
        raise InvalidArgumentsError(f"tail mass beyond K_max is {tail:.3g}; raise K_max")
    k = np.arange(K_max + 1)
    closed = np.exp(math.log(4.0) + np.log(k + 1.0) + k * math.log(N) - (k + 2) * math.log(N + 2.0))
    cf_tail = float(1.0 - closed.sum())
    if cf_tail >= tol:
        raise InvalidArgumentsError(f"truncation at K_max={K_max} drops {cf_tail:.3g} of the mass")

    fp, lam = fixed_point_solution(N, K_max)
    rng = np.random.default_rng(seed)
    runs = [projected_ascent(N, K_max, _random_feasible_start(N, K_max, rng)) for _ in range(starts)]
    best = max(runs, key=lambda r: r.objective_history[-1])
    return KKTReport(
        N=N,
        K_max=K_max,
        closed_form=closed,
        fixed_point=fp,
        lambda_fixed_point=lam,
        lambda_ascent=best.multiplier,
        lambda_closed_form=math.log(N / (N + 2)),
        ascent_runs=runs,
        linf_fixed_point=float(np.abs(fp - closed).max()),
        linf_ascent=max(float(np.abs(r.weights - closed).max()) for r in runs),
        linf_between_solvers=max(float(np.abs(r.weights - fp).max()) for r in runs),
        tail_mass=cf_tail,
    )
