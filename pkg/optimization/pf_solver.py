"""
Weighted proportional-fair power/bandwidth allocation.

Maximises sum_i phi_i * ln(r_i) with r_i = w_i * log2(1 + p_i / (n_i * w_i))
subject to per-user minimum rates and total power / bandwidth budgets.

With multipliers lambda (power), mu (bandwidth) and nu_i (rate floors) the
stationarity conditions decouple through the ratio rho = mu / lambda: every
user's normalised SNR x_i = p_i / (n_i * w_i) solves

    (1 + x) ln(1 + x) - x = rho / n_i

which has the closed form x = exp(1 + W0((c - 1) / e)) - 1 (Lambert W),
polished by Newton steps. Given rho, unconstrained users take bandwidth
phi_i / (lambda n_i (1 + x_i) ln(1 + x_i)) and users pinned to their floor take
r_min_i / log2(1 + x_i). lambda follows from the bandwidth budget and rho from
the power budget, which is a monotone 1-D root. Rate floors are handled with
an active set.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import lambertw

from core.config import SolverConfig
from core.exceptions import ValidationError
from core.models import PfProblem, PfSolution, SolverStatus

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
_BRACKET_STEP = 2.0
_BRACKET_STEPS = 120


@dataclass
class FeasibilityResult:
    """Minimum power needed to meet every rate floor using the whole bandwidth budget"""
    feasible: bool
    min_power_needed: float
    rho: float = 0.0
    user_power: Optional[np.ndarray] = None


def rate(p: np.ndarray, w: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """w * log2(1 + p / (noise * w)), zero where w or p is zero"""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = w * np.log1p(p / (noise * w)) / LN2
    return np.where((w > 0) & (p > 0), r, 0.0)


def snr_for_ratio(c: np.ndarray, newton_steps: int = 3) -> np.ndarray:
    """Solve (1 + x) ln(1 + x) - x = c for x >= 0"""
    c = np.maximum(np.asarray(c, dtype=float), 0.0)
    w0 = np.real(lambertw((c - 1.0) / math.e, 0))
    x = np.expm1(1.0 + w0)
    x = np.where(c < 1e-12, np.sqrt(2.0 * c), np.maximum(x, 0.0))
    for _ in range(newton_steps):
        log_term = np.log1p(x)
        g = (1.0 + x) * log_term - x
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(log_term > 0, (g - c) / log_term, 0.0)
        x = np.maximum(x - step, 0.0)
    return x


def _bracket(fn: Callable[[float], float], t0: float) -> Tuple[float, float]:
    """Find t_lo <= t_hi with fn(t_lo) <= 0 <= fn(t_hi) for an increasing fn; (t0, t0) if fn(t0) == 0"""
    lo = hi = t0
    f_lo = f_hi = fn(t0)
    steps = 0
    while f_hi < 0 and steps < _BRACKET_STEPS:
        lo, f_lo = hi, f_hi
        hi += _BRACKET_STEP
        f_hi = fn(hi)
        steps += 1
    while f_lo > 0 and steps < 2 * _BRACKET_STEPS:
        hi, f_hi = lo, f_lo
        lo -= _BRACKET_STEP
        f_lo = fn(lo)
        steps += 1
    if not (f_lo <= 0 <= f_hi):
        raise ArithmeticError("could not bracket the dual ratio")
    return lo, hi


def _root(fn: Callable[[float], float], lo: float, hi: float, maxiter: int = 100) -> Tuple[float, bool, int]:
    """brentq on a bracket from _bracket; a degenerate bracket is already the root"""
    if lo == hi:
        return lo, True, 0
    t, info = brentq(
        fn, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps,
        maxiter=maxiter, full_output=True, disp=False,
    )
    return t, bool(info.converged), info.iterations


def _initial_log_ratio(problem: PfProblem) -> float:
    n_ref = float(np.median(problem.noise))
    x_ref = problem.power_budget / (problem.bandwidth_budget * n_ref)
    g_ref = (1.0 + x_ref) * math.log1p(x_ref) - x_ref
    return math.log(max(n_ref * g_ref, 1e-300))


def feasibility_check(problem: PfProblem, config: SolverConfig = SolverConfig()) -> FeasibilityResult:
    """
    Minimum total power for the constrained users alone to meet their floors.

    Power for rate r on bandwidth w is n w (2^(r/w) - 1), convex and
    decreasing in w; equalising its w-derivative across users gives the same
    ratio map as the main problem, so the optimal split is a 1-D root on the
    bandwidth budget.
    """
    mask = problem.constrained
    if not mask.any():
        return FeasibilityResult(True, 0.0, 0.0, np.zeros(problem.size))

    noise = problem.noise[mask]
    r_min = problem.r_min[mask]
    budget_w = problem.bandwidth_budget

    def excess_bandwidth(t: float) -> float:
        x = snr_for_ratio(math.exp(t) / noise)
        with np.errstate(divide="ignore"):
            return budget_w - float(np.sum(r_min * LN2 / np.log1p(x)))

    lo, hi = _bracket(excess_bandwidth, _initial_log_ratio(problem))
    t_star, _, _ = _root(excess_bandwidth, lo, hi, config.max_outer_iter)
    x = snr_for_ratio(math.exp(t_star) / noise)
    w = r_min * LN2 / np.log1p(x)
    p = x * noise * w
    user_power = np.zeros(problem.size)
    user_power[mask] = p
    min_power = float(np.sum(p))
    feasible = min_power <= problem.power_budget * (1.0 + 1e-9)
    return FeasibilityResult(feasible, min_power, math.exp(t_star), user_power)


class _ActiveSetSolve:
    """Closed-form allocation for a fixed set of users pinned to their floors"""

    def __init__(self, problem: PfProblem, pinned: np.ndarray):
        self.problem = problem
        self.pinned = pinned
        self.free = ~pinned

    def allocation(self, t: float):
        pr = self.problem
        x = snr_for_ratio(math.exp(t) / pr.noise)
        log_term = np.log1p(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            w_pinned = np.where(self.pinned, pr.r_min * LN2 / log_term, 0.0)
            a = np.where(self.free, pr.phi / (pr.noise * (1.0 + x) * log_term), 0.0)
        return x, w_pinned, a

    def power_residual(self, t: float) -> float:
        pr = self.problem
        x, w_pinned, a = self.allocation(t)
        left_w = pr.bandwidth_budget - float(np.sum(w_pinned))
        if not np.isfinite(left_w) or left_w <= 0:
            return -pr.power_budget if not self.pinned.any() else math.inf
        p_pinned = float(np.sum(x * pr.noise * w_pinned))
        a_sum = float(np.sum(a))
        p_free = left_w * float(np.sum(a * x * pr.noise)) / a_sum if a_sum > 0 else 0.0
        return p_free + p_pinned - pr.power_budget

    def solution(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float, float, np.ndarray]:
        pr = self.problem
        x, w_pinned, a = self.allocation(t)
        left_w = pr.bandwidth_budget - float(np.sum(w_pinned))
        a_sum = float(np.sum(a))
        lam = a_sum / left_w
        w = np.where(self.pinned, w_pinned, a / lam)
        p = x * pr.noise * w
        r = rate(p, w, pr.noise)
        mu = math.exp(t) * lam
        with np.errstate(divide="ignore", invalid="ignore"):
            nu = np.where(self.pinned, lam * pr.noise * (1.0 + x) * LN2 - pr.phi / r, 0.0)
        return p, w, r, lam, mu, nu


def _lower_log_ratio(problem: PfProblem, pinned: np.ndarray, t0: float) -> Optional[float]:
    """Smallest log-ratio at which the pinned users fit in the bandwidth budget"""
    if not pinned.any():
        return None
    noise = problem.noise[pinned]
    r_min = problem.r_min[pinned]

    def excess_bandwidth(t: float) -> float:
        x = snr_for_ratio(math.exp(t) / noise)
        with np.errstate(divide="ignore"):
            return problem.bandwidth_budget - float(np.sum(r_min * LN2 / np.log1p(x)))

    lo, hi = _bracket(excess_bandwidth, t0)
    return _root(excess_bandwidth, lo, hi)[0]


def _solve_pinned(problem: PfProblem, pinned: np.ndarray, config: SolverConfig):
    """Solve with a fixed active set; returns (solution tuple, converged) or None if infeasible"""
    solver = _ActiveSetSolve(problem, pinned)
    t0 = _initial_log_ratio(problem)
    t_floor = _lower_log_ratio(problem, pinned, t0)
    if t_floor is None:
        lo, hi = _bracket(solver.power_residual, t0)
    else:
        lo = t_floor + 1e-9
        if solver.power_residual(lo) >= 0:
            return None
        hi = max(lo + _BRACKET_STEP, t0)
        steps = 0
        while solver.power_residual(hi) <= 0 and steps < _BRACKET_STEPS:
            hi += _BRACKET_STEP
            steps += 1
    t_star, converged, iterations = _root(solver.power_residual, lo, hi, config.max_outer_iter)
    return solver.solution(t_star), converged, iterations


def _validate(problem: PfProblem):
    if not (np.all(np.isfinite(problem.noise)) and np.all(problem.noise > 0)):
        raise ValidationError("noise", problem.noise.tolist(), "effective noise must be positive")
    if not np.all(problem.phi > 0):
        raise ValidationError("phi", problem.phi.tolist(), "weights must be positive")
    if np.any(problem.r_min < 0):
        raise ValidationError("r_min", problem.r_min.tolist(), "rate floors must be >= 0")


def _enforce_budgets(problem: PfProblem, p: np.ndarray, w: np.ndarray, min_bw: float):
    w = np.maximum(w, min_bw)
    total_w = float(np.sum(w))
    if total_w > problem.bandwidth_budget:
        w = w * (problem.bandwidth_budget / total_w)
    total_p = float(np.sum(p))
    if total_p > problem.power_budget:
        p = p * (problem.power_budget / total_p)
    return p, w


def solve(problem: PfProblem, config: SolverConfig = SolverConfig()) -> PfSolution:
    """Solve the weighted PF problem; status reports optimal, infeasible or degraded"""
    n = problem.size
    if n == 0:
        return PfSolution(np.zeros(0), np.zeros(0), np.zeros(0), SolverStatus.OPTIMAL)
    _validate(problem)
    if problem.power_budget <= 0 or problem.bandwidth_budget <= 0:
        zeros = np.zeros(n)
        status = SolverStatus.INFEASIBLE if problem.constrained.any() else SolverStatus.DEGRADED
        return PfSolution(zeros, zeros.copy(), zeros.copy(), status, nu=zeros.copy())

    try:
        feasibility = feasibility_check(problem, config)
    except (ArithmeticError, ValueError) as e:
        logger.debug("Feasibility check failed: %s", e)
        zeros = np.zeros(n)
        return PfSolution(zeros, zeros.copy(), zeros.copy(), SolverStatus.DEGRADED, nu=zeros.copy())
    if not feasibility.feasible:
        logger.debug("PF problem infeasible: needs %.4g W of %.4g W",
                     feasibility.min_power_needed, problem.power_budget)
        zeros = np.zeros(n)
        return PfSolution(zeros, zeros.copy(), zeros.copy(), SolverStatus.INFEASIBLE, nu=zeros.copy())

    tol = config.tolerance
    constrained = problem.constrained
    pinned = np.zeros(n, dtype=bool)
    best = None
    status = SolverStatus.DEGRADED
    iterations = 0

    for _ in range(config.max_inner_iter):
        if not (~pinned).any():
            # Everyone pinned: release the cheapest floor and re-solve.
            cheapest = int(np.argmin(np.where(pinned, problem.r_min, np.inf)))
            pinned[cheapest] = False
        try:
            result = _solve_pinned(problem, pinned, config)
        except (ArithmeticError, ValueError) as e:
            logger.debug("Active-set solve failed: %s", e)
            break
        if result is None:
            # Pinned set is exactly at the feasibility boundary.
            break
        (p, w, r, lam, mu, nu), converged, its = result
        iterations += its
        best = (p, w, r, lam, mu, nu)

        violators = (~pinned) & constrained & (r < problem.r_min * (1.0 - tol))
        with np.errstate(divide="ignore", invalid="ignore"):
            nu_scale = np.where(pinned, problem.phi / problem.r_min, 1.0)
        negative = pinned & (nu < -tol * nu_scale)

        if not violators.any() and not negative.any():
            status = SolverStatus.OPTIMAL if converged else SolverStatus.DEGRADED
            break
        if negative.any():
            worst = int(np.argmin(np.where(negative, nu / nu_scale, np.inf)))
            pinned[worst] = False
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                shortfall = np.where(violators, (problem.r_min - r) / problem.r_min, -np.inf)
            pinned[int(np.argmax(shortfall))] = True

    if best is None:
        zeros = np.zeros(n)
        return PfSolution(zeros, zeros.copy(), zeros.copy(), SolverStatus.DEGRADED, nu=zeros.copy())

    p, w, r, lam, mu, nu = best
    p, w = _enforce_budgets(problem, p, w, config.min_bandwidth_hz)
    r = rate(p, w, problem.noise)
    if status is not SolverStatus.OPTIMAL:
        logger.debug("PF solve ended %s after %d iterations", status.value, iterations)
    return PfSolution(
        power=p, bandwidth=w, rate=r, status=status,
        lambda_p=lam, mu_w=mu, nu=np.maximum(nu, 0.0), iterations=iterations,
    )


def kkt_residuals(problem: PfProblem, solution: PfSolution) -> Dict[str, float]:
    """Relative stationarity, budget slackness and rate-floor residuals"""
    noise = problem.noise
    p, w, r = solution.power, solution.bandwidth, solution.rate
    x = p / (noise * w)
    dr_dp = 1.0 / (noise * (1.0 + x) * LN2)
    dr_dw = (np.log1p(x) - x / (1.0 + x)) / LN2
    weight = problem.phi / r + solution.nu
    lam, mu = solution.lambda_p, solution.mu_w
    stat_p = np.abs(weight * dr_dp - lam) / lam
    stat_w = np.abs(weight * dr_dw - mu) / mu
    with np.errstate(divide="ignore", invalid="ignore"):
        floor_gap = np.where(problem.constrained, (problem.r_min - r) / problem.r_min, 0.0)
    return {
        "stationarity_p": float(np.max(stat_p)),
        "stationarity_w": float(np.max(stat_w)),
        "power_slack": float(abs(problem.power_budget - np.sum(p)) / problem.power_budget),
        "bandwidth_slack": float(abs(problem.bandwidth_budget - np.sum(w)) / problem.bandwidth_budget),
        "rate_violation": float(max(0.0, np.max(floor_gap))),
    }
