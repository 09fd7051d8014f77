"""
Exhaustive grid search for small PF problems.

Power and bandwidth budgets are each split into grid_points equal steps; a
user's share is a pair of step counts. The best split is found by max-plus
convolution of per-user utility tables, which visits every grid allocation
without enumerating them one by one. Every grid point is feasible, so the
result is a lower bound on the continuous optimum.
"""

import logging
from typing import List, Tuple

import numpy as np

from core.exceptions import ValidationError
from core.models import PfProblem, PfSolution, SolverStatus
from optimization.pf_solver import rate

logger = logging.getLogger(__name__)

MAX_ORACLE_USERS = 4


def _utility_table(problem: PfProblem, i: int, p_grid: np.ndarray, w_grid: np.ndarray) -> np.ndarray:
    """phi_i * ln(rate) on the (power, bandwidth) grid, -inf where the floor is missed"""
    r = rate(p_grid[:, None], w_grid[None, :], problem.noise[i])
    ok = (r > 0) & (r >= problem.r_min[i] * (1.0 - 1e-12))
    with np.errstate(divide="ignore"):
        return np.where(ok, problem.phi[i] * np.log(np.where(r > 0, r, 1.0)), -np.inf)


def _combine(prior: np.ndarray, table: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Max-plus convolution over both axes.

    Returns the combined table and, per cell, the prior's share (a, b) that
    attained it.
    """
    size = prior.shape[0]
    combined = np.full_like(prior, -np.inf)
    arg_a = np.zeros(prior.shape, dtype=int)
    arg_b = np.zeros(prior.shape, dtype=int)
    for a in range(size):
        for b in range(size):
            value = prior[a, b]
            if value == -np.inf:
                continue
            candidate = value + table[: size - a, : size - b]
            region = combined[a:, b:]
            better = candidate > region
            region[better] = candidate[better]
            arg_a[a:, b:][better] = a
            arg_b[a:, b:][better] = b
    return combined, arg_a, arg_b


def brute_force_oracle(problem: PfProblem, grid_points: int = 200) -> PfSolution:
    """
    Best grid allocation of a PF problem with at most four users.

    Args:
        problem: Problem to solve
        grid_points: Number of steps per budget axis

    Returns:
        PfSolution with status optimal, or infeasible if no grid point meets
        every rate floor
    """
    n = problem.size
    if n == 0 or n > MAX_ORACLE_USERS:
        raise ValidationError("users", n, f"oracle supports 1 to {MAX_ORACLE_USERS} users")
    if grid_points < 1:
        raise ValidationError("grid_points", grid_points, "must be >= 1")

    g = grid_points
    p_grid = np.arange(g + 1) * (problem.power_budget / g)
    w_grid = np.arange(g + 1) * (problem.bandwidth_budget / g)
    tables = [_utility_table(problem, i, p_grid, w_grid) for i in range(n)]

    prior = tables[0]
    choices: List[Tuple[np.ndarray, np.ndarray]] = []
    for table in tables[1:-1]:
        prior, arg_a, arg_b = _combine(prior, table)
        choices.append((arg_a, arg_b))

    # The last user only has to fit in what the others leave, so a prefix max
    # of its table replaces the full convolution.
    if n == 1:
        total = prior
        last_best = None
    else:
        last = tables[-1]
        prefix = np.maximum.accumulate(np.maximum.accumulate(last, axis=0), axis=1)
        total = prior + prefix[::-1, ::-1]
        last_best = last

    if not np.isfinite(total).any():
        zeros = np.zeros(n)
        return PfSolution(zeros, zeros.copy(), zeros.copy(), SolverStatus.INFEASIBLE)

    a_star, b_star = np.unravel_index(int(np.argmax(total)), total.shape)
    shares_a = np.zeros(n, dtype=int)
    shares_b = np.zeros(n, dtype=int)

    if last_best is not None:
        window = last_best[: g - a_star + 1, : g - b_star + 1]
        la, lb = np.unravel_index(int(np.argmax(window)), window.shape)
        shares_a[-1], shares_b[-1] = la, lb

    a, b = int(a_star), int(b_star)
    for k in range(len(choices) - 1, -1, -1):
        arg_a, arg_b = choices[k]
        pa, pb = int(arg_a[a, b]), int(arg_b[a, b])
        shares_a[k + 1], shares_b[k + 1] = a - pa, b - pb
        a, b = pa, pb
    shares_a[0], shares_b[0] = a, b

    power = p_grid[shares_a]
    bandwidth = w_grid[shares_b]
    user_rate = np.array([rate(power[i], bandwidth[i], problem.noise[i]) for i in range(n)], dtype=float)
    logger.debug("Oracle best objective %.6g on a %d-point grid", float(np.max(total)), g)
    return PfSolution(power, bandwidth, user_rate, SolverStatus.OPTIMAL)
