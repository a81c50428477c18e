# src/services/dp_oracle.py
"""
Dynamic program for the range problem on a trinomial walk.

The walk lives on x_k = lo + k h, k = 0..N, and moves up, down or stays with
probabilities matched to the generator of X. The state is (a, j, b), the
indices of the running minimum, the position and the running maximum. States
with a larger range are settled first, so for a fixed pair (a, b) the unknowns
form one tridiagonal obstacle problem, solved by policy iteration.

At a truncation edge a move that would extend the range lands back on the
edge with the payoff raised by one cell: the value keeps its excess over the
payoff as the range grows, which holds exactly on C+ and C- of the natural
scale. The walk's extremes trail those of the diffusion by about half a cell
each, so lattice values carry an O(h) deficit; `extrapolated_value` removes it
with two lattices.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from scipy.linalg import solve_banded

from src.config.constants import DP_SPACE_STEPS, DP_TIME_FACTOR, DP_TRUNCATION
from src.models.cost import CostFunction
from src.models.diffusion import TransformedModel
from src.utils.errors import NotConverged

logger = logging.getLogger(__name__)

_MAX_POLICY_ROUNDS = 200


@dataclass(frozen=True, eq=False)
class DPResult:
    """Values of the lattice problem keyed by (a, b); entry j - a of each array is U(a, j, b)."""
    nodes: np.ndarray
    dt: float
    values: Dict[Tuple[int, int], np.ndarray] = field(repr=False)
    stop_fraction: float
    policy_rounds: int

    @property
    def step(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    def index_of(self, x: float) -> int:
        """Nearest lattice index."""
        k = int(round((x - self.nodes[0]) / self.step))
        if not 0 <= k < self.nodes.size:
            raise ValueError(f"x={x} lies outside the lattice [{self.nodes[0]}, {self.nodes[-1]}]")
        return k

    def value(self, i: float, x: float, s: float) -> float:
        """Lattice value at the nodes nearest to (i, x, s)."""
        a, j, b = self.index_of(i), self.index_of(x), self.index_of(s)
        if not a <= j <= b:
            raise ValueError(f"need i <= x <= s, got ({i}, {x}, {s})")
        return float(self.values[(a, b)][j - a])


def _transition_probabilities(model: TransformedModel, nodes: np.ndarray, h: float,
                              time_factor: float) -> Tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    mu = np.asarray(model.mu(nodes), dtype=float) * np.ones_like(nodes)
    variance = np.asarray(model.sigma(nodes), dtype=float) ** 2 * np.ones_like(nodes)
    dt = h * h / (time_factor * float(np.max(variance)))
    diffusive = variance * dt / (2.0 * h * h)
    drifting = mu * dt / (2.0 * h)
    p_up = diffusive + drifting
    p_down = diffusive - drifting
    if np.any(p_up < 0.0) or np.any(p_down < 0.0):
        raise ValueError(f"lattice step {h:g} too coarse for the drift: a move probability is negative")
    return dt, p_up, 1.0 - p_up - p_down, p_down


def _solve_pair(payoff: float, running: np.ndarray, p_up: np.ndarray, p_stay: np.ndarray,
                p_down: np.ndarray, up_exit: float, down_exit: float, edge_gain: float) -> Tuple[np.ndarray, int]:
    """
    Obstacle problem u = max(payoff, -running + p_up u+ + p_stay u + p_down u-) on one (a, b) pair.

    up_exit/down_exit are the known values after leaving the pair through a new
    maximum or minimum; NaN marks a truncation edge, where the move returns to
    the same node worth `edge_gain` more.
    """
    n = running.size
    stay = p_stay.copy()
    up = p_up.copy()
    down = p_down.copy()
    rhs_known = -running.copy()
    if np.isnan(up_exit):
        stay[-1] += up[-1]
        rhs_known[-1] += up[-1] * edge_gain
    else:
        rhs_known[-1] += up[-1] * up_exit
    up[-1] = 0.0
    if np.isnan(down_exit):
        stay[0] += down[0]
        rhs_known[0] += down[0] * edge_gain
    else:
        rhs_known[0] += down[0] * down_exit
    down[0] = 0.0

    def continuation(u: np.ndarray) -> np.ndarray:
        result = rhs_known + stay * u
        result[:-1] += up[:-1] * u[1:]
        result[1:] += down[1:] * u[:-1]
        return result

    u = np.full(n, payoff)
    stopping = continuation(u) <= payoff
    for rounds in range(1, _MAX_POLICY_ROUNDS + 1):
        banded = np.zeros((3, n))
        banded[1] = np.where(stopping, 1.0, 1.0 - stay)
        banded[0, 1:] = np.where(stopping[:-1], 0.0, -up[:-1])
        banded[2, :-1] = np.where(stopping[1:], 0.0, -down[1:])
        rhs = np.where(stopping, payoff, rhs_known)
        u = solve_banded((1, 1), banded, rhs)
        updated = continuation(u) <= payoff + 1e-14
        if np.array_equal(updated, stopping):
            return np.maximum(u, payoff), rounds
        stopping = updated
    raise NotConverged("policy iteration did not settle on a lattice pair", residual=float("nan"))


def trinomial_range_value(model: TransformedModel, cost: CostFunction,
                          truncation: Tuple[float, float] = DP_TRUNCATION,
                          space_steps: int = DP_SPACE_STEPS,
                          time_factor: float = DP_TIME_FACTOR) -> DPResult:
    """
    Solve the lattice version of the range problem.

    Args:
        model: Model supplying mu and sigma on the lattice
        cost: Running cost c(i, x, s)
        truncation: Lattice end points
        space_steps: Number of lattice intervals
        time_factor: dt = h^2 / (time_factor * max sigma^2); above 1 keeps p_stay positive

    Returns:
        DPResult with every (a, j, b) value
    """
    if space_steps < 2:
        raise ValueError(f"space_steps must be at least 2, got {space_steps}")
    if time_factor < 1.0:
        raise ValueError(f"time_factor must be at least 1, got {time_factor}")
    nodes = np.linspace(truncation[0], truncation[1], space_steps + 1)
    h = float(nodes[1] - nodes[0])
    dt, p_up, p_stay, p_down = _transition_probabilities(model, nodes, h, time_factor)
    top = space_steps
    logger.info("Lattice dynamic program: %d nodes, h=%.4g, dt=%.4g", nodes.size, h, dt)

    values: Dict[Tuple[int, int], np.ndarray] = {}
    stopped = 0
    total = 0
    worst_rounds = 0
    for width in range(top, -1, -1):
        for a in range(0, top - width + 1):
            b = a + width
            payoff = float(nodes[b] - nodes[a])
            span = slice(a, b + 1)
            running = dt * np.asarray(cost(nodes[a], nodes[span], nodes[b]), dtype=float) * np.ones(b - a + 1)
            up_exit = values[(a, b + 1)][-1] if b < top else np.nan
            down_exit = values[(a - 1, b)][0] if a > 0 else np.nan
            u, rounds = _solve_pair(payoff, running, p_up[span], p_stay[span], p_down[span], up_exit, down_exit, h)
            values[(a, b)] = u
            worst_rounds = max(worst_rounds, rounds)
            stopped += int(np.count_nonzero(u <= payoff + 1e-14))
            total += u.size
    return DPResult(nodes=nodes, dt=dt, values=values, stop_fraction=stopped / total, policy_rounds=worst_rounds)


def extrapolated_value(model: TransformedModel, cost: CostFunction, point: Tuple[float, float, float],
                       truncation: Tuple[float, float] = DP_TRUNCATION,
                       space_steps: int = DP_SPACE_STEPS,
                       time_factor: float = DP_TIME_FACTOR) -> Tuple[float, float, float]:
    """
    Lattice value at `point` with the O(h) deficit extrapolated away.

    A second lattice with about half the intervals (rounded down to an even
    count) is solved and the two values are combined linearly in h.

    Returns:
        Tuple (extrapolated, fine lattice value, coarse lattice value)

    Raises:
        ValueError: if space_steps < 4 or the point is not a node of both lattices
    """
    if space_steps < 4:
        raise ValueError(f"extrapolation needs at least 4 space steps, got {space_steps}")
    coarse_steps = max(2, (space_steps // 2) // 2 * 2)
    estimates = []
    for steps in (space_steps, coarse_steps):
        lattice = trinomial_range_value(model, cost, truncation, steps, time_factor)
        for coordinate in point:
            node = lattice.nodes[lattice.index_of(coordinate)]
            if abs(node - coordinate) > 1e-9 * max(1.0, abs(coordinate)):
                raise ValueError(f"{coordinate} is not a node of the lattice with {steps} intervals")
        estimates.append((lattice.step, lattice.value(*point)))
    (h_fine, fine), (h_coarse, coarse) = estimates
    value = (h_coarse * fine - h_fine * coarse) / (h_coarse - h_fine)
    logger.info("Lattice values %.5f (h=%.4g) and %.5f (h=%.4g) extrapolate to %.5f",
                fine, h_fine, coarse, h_coarse, value)
    return value, fine, coarse
