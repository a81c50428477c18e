# src/services/detection_sim.py
"""
Monte Carlo for the detection problem and for the range problem.

Both run the same kernel. A state process Y is stepped by Euler-Maruyama or
Milstein; for detection Y is the observed Z and X = 2F(Z) - 1, for the range
problem Y is X itself. The running extrema of each step are drawn from the
Brownian-bridge law with the coefficient frozen at the step start, and the
hidden level counts as hit once it lies inside [min, max] of the path so far.
Paths are split into fixed blocks, each with its own Philox stream keyed by
(seed, block), so results do not depend on the number of threads.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.config.constants import (
    CENSORING_CAP,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_DT,
    DEFAULT_HORIZON,
    DEFAULT_N_PATHS,
    QUANTILE_GRID,
    REGION_TOL,
    RULE_KINDS,
    SCHEMES,
)
from src.models.cost import CostFunction, constant_cost, detection_cost
from src.models.diffusion import DiffusionSpec, HiddenLevelLaw, TransformedModel
from src.models.surfaces import SurfacePair
from src.utils.errors import ExcessiveCensoring

logger = logging.getLogger(__name__)

ArrayMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PathConfig:
    """Time grid, path count, seed and scheme of one simulation run."""
    dt: float = DEFAULT_DT
    horizon: float = DEFAULT_HORIZON
    n_paths: int = DEFAULT_N_PATHS
    seed: int = 0
    scheme: str = "euler-maruyama"
    block_size: int = DEFAULT_BLOCK_SIZE
    threads: int = 1
    bridge: bool = True
    censoring_cap: float = CENSORING_CAP
    trace_paths: int = 0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.horizon >= self.dt:
            raise ValueError(f"horizon must be at least dt, got {self.horizon}")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be at least 1, got {self.n_paths}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.block_size < 1:
            raise ValueError(f"block_size must be at least 1, got {self.block_size}")
        if not 0.0 <= self.censoring_cap <= 1.0:
            raise ValueError(f"censoring_cap must lie in [0, 1], got {self.censoring_cap}")

    @property
    def n_steps(self) -> int:
        return int(np.ceil(self.horizon / self.dt - 1e-9))

    @property
    def n_blocks(self) -> int:
        return -(-self.n_paths // self.block_size)


@dataclass(frozen=True, eq=False)
class StoppingRule:
    """
    A stopping rule in terms of (I, X, S).

    extremal stops when f*(I, S) <= X <= g*(I, S); range_threshold when
    S - I >= threshold; quantile_hit when Z first hits F^-1(quantile), i.e.
    X hits 2 quantile - 1; immediate stops at time zero.
    """
    kind: str
    surfaces: Optional[SurfacePair] = None
    threshold: Optional[float] = None
    quantile: Optional[float] = None
    description: str = ""

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"rule kind must be one of {RULE_KINDS}, got {self.kind!r}")
        if self.kind == "extremal" and self.surfaces is None:
            raise ValueError("the extremal rule needs surfaces")
        if self.kind == "range_threshold" and not (self.threshold is not None and self.threshold > 0.0):
            raise ValueError(f"range_threshold needs a positive threshold, got {self.threshold}")
        if self.kind == "quantile_hit" and not (self.quantile is not None and 0.0 < self.quantile < 1.0):
            raise ValueError(f"quantile_hit needs a quantile in (0, 1), got {self.quantile}")

    @classmethod
    def extremal(cls, surfaces: SurfacePair) -> "StoppingRule":
        return cls("extremal", surfaces=surfaces, description="stop when f*(I,S) <= X <= g*(I,S)")

    @classmethod
    def immediate(cls) -> "StoppingRule":
        return cls("immediate", description="stop at time zero")

    @classmethod
    def range_threshold(cls, r: float) -> "StoppingRule":
        return cls("range_threshold", threshold=r, description=f"stop when S - I >= {r:g}")

    @classmethod
    def quantile_hit(cls, q: float) -> "StoppingRule":
        return cls("quantile_hit", quantile=q, description=f"stop when Z hits its {q:g}-quantile")

    @property
    def label(self) -> str:
        if self.kind == "range_threshold":
            return f"range_threshold({self.threshold:g})"
        if self.kind == "quantile_hit":
            return f"quantile_hit({self.quantile:g})"
        return self.kind


@dataclass
class LossReport:
    """
    Estimates of one run, each with its standard error.

    Detection fields are None for range-problem runs. For detection runs the
    range payoff is 2 (1 - transformed_loss), the range-problem objective under
    the cost c (s - i).
    """
    rule: str
    n_paths: int
    e_tau: float
    e_tau_se: float
    mean_range: float
    mean_range_se: float
    range_payoff: float
    range_payoff_se: float
    censoring_rate: float
    truncation_exits: int
    dt: float
    horizon: float
    seed: int
    p_early: Optional[float] = None
    p_early_se: Optional[float] = None
    e_late: Optional[float] = None
    e_late_se: Optional[float] = None
    combined: Optional[float] = None
    combined_se: Optional[float] = None
    transformed_loss: Optional[float] = None
    transformed_loss_se: Optional[float] = None
    identity_gap: Optional[float] = None
    identity_gap_se: Optional[float] = None
    trace: Optional[pd.DataFrame] = field(default=None, repr=False)

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data.pop("trace")
        return data


@dataclass(frozen=True)
class _Dynamics:
    drift: ArrayMap
    diffusion: ArrayMap
    diffusion_derivative: ArrayMap
    to_x: ArrayMap
    from_x: ArrayMap
    start: Tuple[float, float, float]
    bounds: Tuple[float, float]
    watch: Tuple[float, float]
    x_bounds: Tuple[float, float]
    running_cost: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    hidden: Optional[ArrayMap] = None


@dataclass
class _BlockOutcome:
    tau: np.ndarray
    range_x: np.ndarray
    cost_integral: np.ndarray
    censored: np.ndarray
    exited: np.ndarray
    early: Optional[np.ndarray]
    late: Optional[np.ndarray]
    trace: List[tuple]


class _RuleMonitor:
    """Vectorized stopping test; extremal thresholds are refreshed only when I or S moves."""

    def __init__(self, rule: StoppingRule, dynamics: _Dynamics, n: int):
        self.rule = rule
        self.dynamics = dynamics
        if rule.kind == "extremal":
            self.lower = np.full(n, np.inf)
            self.upper = np.full(n, -np.inf)
            self.f_x = np.full(n, np.nan)
            self.g_x = np.full(n, np.nan)
        elif rule.kind == "quantile_hit":
            self.level = float(dynamics.from_x(np.asarray(2.0 * rule.quantile - 1.0)))

    def refresh(self, idx: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> None:
        if self.rule.kind != "extremal" or idx.size == 0:
            return
        i_x = self.dynamics.to_x(lo)
        s_x = self.dynamics.to_x(hi)
        f = np.atleast_1d(self.rule.surfaces.f_at(i_x, s_x))
        g = np.atleast_1d(self.rule.surfaces.g_at(i_x, s_x))
        on_diagonal = s_x - i_x <= REGION_TOL
        self.f_x[idx] = np.where(on_diagonal, np.inf, f)
        self.g_x[idx] = np.where(on_diagonal, -np.inf, g)
        x_lo, x_hi = self.dynamics.x_bounds
        lower = self.dynamics.from_x(np.clip(f, x_lo, x_hi))
        upper = self.dynamics.from_x(np.clip(g, x_lo, x_hi))
        self.lower[idx] = np.where(on_diagonal, np.inf, lower)
        self.upper[idx] = np.where(on_diagonal, -np.inf, upper)

    def stops(self, idx: np.ndarray, y: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        kind = self.rule.kind
        if kind == "immediate":
            return np.ones(idx.size, dtype=bool)
        if kind == "range_threshold":
            return self.dynamics.to_x(hi) - self.dynamics.to_x(lo) >= self.rule.threshold
        if kind == "quantile_hit":
            return (lo <= self.level) & (self.level <= hi)
        return (self.lower[idx] <= y) & (y <= self.upper[idx])

    def outside_c0(self, idx: np.ndarray) -> np.ndarray:
        if self.rule.kind != "extremal":
            return np.zeros(idx.size, dtype=bool)
        return self.lower[idx] <= self.upper[idx]

    def crossed(self, idx: np.ndarray, seg_lo: np.ndarray, seg_hi: np.ndarray) -> np.ndarray:
        """Whether a step spanning [seg_lo, seg_hi] met the stopping interval; extremal rule only."""
        if self.rule.kind != "extremal":
            return np.zeros(idx.size, dtype=bool)
        return (self.lower[idx] <= seg_hi) & (seg_lo <= self.upper[idx])

    def regions(self, idx: np.ndarray, x: np.ndarray) -> List[str]:
        if self.rule.kind != "extremal":
            return [""] * idx.size
        f, g = self.f_x[idx], self.g_x[idx]
        labels = np.where(f > g, "C0", np.where(x < f, "Cminus", np.where(x > g, "Cplus", "D")))
        return labels.tolist()


def _step_extrema(rng: np.random.Generator, start: np.ndarray, end: np.ndarray, coefficient: np.ndarray,
                  dt: float, bridge: bool) -> Tuple[np.ndarray, np.ndarray]:
    if not bridge:
        return np.minimum(start, end), np.maximum(start, end)
    # Inverse of P(max > m) = exp(-2 (m - a)(m - b) / (v^2 dt)) for a bridge from a to b
    jump2 = (end - start) ** 2
    spread = 2.0 * coefficient ** 2 * dt
    top = 0.5 * (start + end + np.sqrt(jump2 - spread * np.log(1.0 - rng.random(start.size))))
    bottom = 0.5 * (start + end - np.sqrt(jump2 - spread * np.log(1.0 - rng.random(start.size))))
    return bottom, top


def _run_block(dynamics: _Dynamics, rule: StoppingRule, config: PathConfig, block: int) -> _BlockOutcome:
    n = min(config.block_size, config.n_paths - block * config.block_size)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([config.seed, block])))
    i0, x0, s0 = (float(v) for v in dynamics.from_x(np.asarray(dynamics.start, dtype=float)))
    y = np.full(n, x0)
    lo = np.full(n, i0)
    hi = np.full(n, s0)
    cost_integral = np.zeros(n)
    tau = np.full(n, np.nan)
    exited = np.zeros(n, dtype=bool)
    detecting = dynamics.hidden is not None
    if detecting:
        hidden = dynamics.hidden(rng.random(n))
        covered = (lo <= hidden) & (hidden <= hi)
        late = np.zeros(n)

    monitor = _RuleMonitor(rule, dynamics, n)
    everyone = np.arange(n)
    monitor.refresh(everyone, lo, hi)
    stopped = monitor.stops(everyone, y, lo, hi)
    tau[stopped] = 0.0
    alive = ~stopped

    traced = np.arange(min(config.trace_paths, n)) if block == 0 else np.arange(0)
    trace: List[tuple] = []

    def record(t: float, idx: np.ndarray, stopping: Optional[np.ndarray] = None) -> None:
        if traced.size == 0:
            return
        keep = np.isin(idx, traced)
        rows = idx[keep]
        if rows.size == 0:
            return
        x = dynamics.to_x(y[rows])
        labels = monitor.regions(rows, x)
        if stopping is not None and rule.kind == "extremal":
            # a step that jumped over D still stopped inside it
            labels = ["D" if hit else label for hit, label in zip(stopping[keep], labels)]
        for path, yv, xv, iv, sv, label in zip(rows, y[rows], x, dynamics.to_x(lo[rows]),
                                               dynamics.to_x(hi[rows]), labels):
            trace.append((int(path), t, float(yv), float(xv), float(iv), float(sv), label))

    record(0.0, everyone)
    dt = config.dt
    sqrt_dt = np.sqrt(dt)
    bound_lo, bound_hi = dynamics.bounds
    watch_lo, watch_hi = dynamics.watch
    milstein = config.scheme == "milstein"
    for k in range(config.n_steps):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        current = y[idx]
        lo_k, hi_k = lo[idx], hi[idx]
        split = monitor.outside_c0(idx)
        # Left-point rule for the running cost
        cost_integral[idx] += dt * np.asarray(
            dynamics.running_cost(dynamics.to_x(lo_k), dynamics.to_x(current), dynamics.to_x(hi_k)), dtype=float)
        if detecting:
            late[idx] += dt * covered[idx]

        increment = sqrt_dt * rng.standard_normal(idx.size)
        coefficient = np.asarray(dynamics.diffusion(current), dtype=float) * np.ones(idx.size)
        moved = current + np.asarray(dynamics.drift(current), dtype=float) * dt + coefficient * increment
        if milstein:
            moved += 0.5 * coefficient * np.asarray(dynamics.diffusion_derivative(current), dtype=float) \
                * (increment ** 2 - dt)
        step_lo, step_hi = _step_extrema(rng, current, moved, coefficient, dt, config.bridge)
        moved = np.clip(moved, bound_lo, bound_hi)
        step_lo = np.clip(step_lo, bound_lo, bound_hi)
        step_hi = np.clip(step_hi, bound_lo, bound_hi)
        exited[idx] |= (step_lo < watch_lo) | (step_hi > watch_hi)

        new_lo = np.minimum(lo_k, step_lo)
        new_hi = np.maximum(hi_k, step_hi)
        changed = (new_lo < lo_k) | (new_hi > hi_k)
        y[idx], lo[idx], hi[idx] = moved, new_lo, new_hi
        if detecting:
            covered[idx] |= (new_lo <= hidden[idx]) & (hidden[idx] <= new_hi)
        monitor.refresh(idx[changed], new_lo[changed], new_hi[changed])

        stopping = monitor.stops(idx, moved, new_lo, new_hi)
        # on C- or C+ a continuous path cannot pass D without entering it
        stopping |= split & monitor.crossed(idx, step_lo, step_hi)
        t = (k + 1) * dt
        record(t, idx, stopping)
        tau[idx[stopping]] = t
        alive[idx[stopping]] = False

    censored = alive.copy()
    tau[censored] = config.n_steps * dt
    range_x = dynamics.to_x(hi) - dynamics.to_x(lo)
    return _BlockOutcome(
        tau=tau,
        range_x=np.asarray(range_x, dtype=float),
        cost_integral=cost_integral,
        censored=censored,
        exited=exited,
        early=~covered if detecting else None,
        late=late if detecting else None,
        trace=trace,
    )


def _run_blocks(dynamics: _Dynamics, rule: StoppingRule, config: PathConfig) -> _BlockOutcome:
    logger.info("Simulating %d paths of rule %s in %d block(s) with %d thread(s)",
                config.n_paths, rule.label, config.n_blocks, config.threads)
    with ThreadPoolExecutor(max_workers=max(1, config.threads)) as pool:
        outcomes = list(pool.map(lambda b: _run_block(dynamics, rule, config, b), range(config.n_blocks)))

    def joined(name: str) -> Optional[np.ndarray]:
        parts = [getattr(o, name) for o in outcomes]
        return None if parts[0] is None else np.concatenate(parts)

    return _BlockOutcome(
        tau=joined("tau"),
        range_x=joined("range_x"),
        cost_integral=joined("cost_integral"),
        censored=joined("censored"),
        exited=joined("exited"),
        early=joined("early"),
        late=joined("late"),
        trace=[row for o in outcomes for row in o.trace],
    )


def _mean_se(values: np.ndarray) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, se


def _trace_frame(rows: List[tuple]) -> Optional[pd.DataFrame]:
    if not rows:
        return None
    return pd.DataFrame(rows, columns=["path", "t", "y", "x", "i", "s", "region"])


def _finish(report: LossReport, outcome: _BlockOutcome, config: PathConfig) -> LossReport:
    if report.censoring_rate > 0.0:
        logger.warning("%.2f%% of paths reached the horizon %.3g", 100.0 * report.censoring_rate, config.horizon)
    if report.truncation_exits:
        logger.warning("%d path(s) left the truncation", report.truncation_exits)
    if report.censoring_rate > config.censoring_cap:
        raise ExcessiveCensoring(
            f"censoring rate {report.censoring_rate:.3%} exceeds the cap {config.censoring_cap:.3%}; "
            f"raise the horizon", report=report,
        )
    return report


def _base_report(rule: StoppingRule, outcome: _BlockOutcome, config: PathConfig) -> Dict[str, object]:
    e_tau, e_tau_se = _mean_se(outcome.tau)
    mean_range, mean_range_se = _mean_se(outcome.range_x)
    payoff, payoff_se = _mean_se(outcome.range_x - outcome.cost_integral)
    return dict(
        rule=rule.label,
        n_paths=config.n_paths,
        e_tau=e_tau,
        e_tau_se=e_tau_se,
        mean_range=mean_range,
        mean_range_se=mean_range_se,
        range_payoff=payoff,
        range_payoff_se=payoff_se,
        censoring_rate=float(np.mean(outcome.censored)),
        truncation_exits=int(np.count_nonzero(outcome.exited)),
        dt=config.dt,
        horizon=config.horizon,
        seed=config.seed,
        trace=_trace_frame(outcome.trace),
    )


def _numeric_derivative(func: ArrayMap, h: float = 1e-6) -> ArrayMap:
    def derivative(y):
        y = np.asarray(y, dtype=float)
        return (np.asarray(func(y + h), dtype=float) - np.asarray(func(y - h), dtype=float)) / (2.0 * h)
    return derivative


def simulate_detection(spec: DiffusionSpec, law: HiddenLevelLaw, cost_constant: float, rule: StoppingRule,
                       config: PathConfig) -> LossReport:
    """
    Estimate P(tau < tau_l) + c E(tau - tau_l)+ for a rule, started at Z = 0.

    The same paths also give the transformed estimate
    1 - E[F(S_tau) - F(I_tau) - c int_0^tau (F(S_t) - F(I_t)) dt];
    identity_gap is the paired difference of the two.

    Raises:
        ExcessiveCensoring: if more than the configured share of paths reach the horizon
    """
    if not cost_constant > 0.0:
        raise ValueError(f"cost_constant must be positive, got {cost_constant}")
    z_lo, z_hi = spec.domain
    if not z_lo < 0.0 < z_hi:
        raise ValueError("the observed process must start inside its domain")

    def to_x(z):
        return 2.0 * np.asarray(law.cdf(z), dtype=float) - 1.0

    def from_x(x):
        return np.asarray(law.quantile(0.5 * (np.asarray(x, dtype=float) + 1.0)), dtype=float)

    x0 = float(to_x(0.0))
    watch = (z_lo, z_hi)
    if rule.kind == "extremal":
        grid = rule.surfaces.grid
        watch = (float(from_x(grid.i_nodes[0])), float(from_x(grid.s_nodes[-1])))
    derivative = spec.diffusion_derivative or _numeric_derivative(spec.diffusion)
    running = detection_cost(cost_constant)
    dynamics = _Dynamics(
        drift=spec.drift,
        diffusion=spec.diffusion,
        diffusion_derivative=derivative,
        to_x=to_x,
        from_x=from_x,
        start=(x0, x0, x0),
        bounds=spec.domain,
        watch=watch,
        x_bounds=(-1.0 + 1e-15, 1.0 - 1e-15),
        running_cost=running,
        hidden=lambda u: np.asarray(law.quantile(u), dtype=float),
    )
    outcome = _run_blocks(dynamics, rule, config)

    direct = outcome.early.astype(float) + cost_constant * outcome.late
    transformed = 1.0 - 0.5 * (outcome.range_x - outcome.cost_integral)
    base = _base_report(rule, outcome, config)
    p_early, p_early_se = _mean_se(outcome.early.astype(float))
    e_late, e_late_se = _mean_se(outcome.late)
    combined, combined_se = _mean_se(direct)
    loss, loss_se = _mean_se(transformed)
    gap, gap_se = _mean_se(direct - transformed)
    report = LossReport(**base, p_early=p_early, p_early_se=p_early_se, e_late=e_late, e_late_se=e_late_se,
                        combined=combined, combined_se=combined_se, transformed_loss=loss,
                        transformed_loss_se=loss_se, identity_gap=gap, identity_gap_se=gap_se)
    logger.info("Detection loss %.5f (se %.5f), transformed %.5f, gap %.2e (se %.2e)",
                combined, combined_se, loss, gap, gap_se)
    return _finish(report, outcome, config)


def simulate_range_objective(model: TransformedModel, cost: CostFunction, start: Tuple[float, float, float],
                             rule: StoppingRule, config: PathConfig) -> LossReport:
    """
    Estimate E[S_tau - I_tau - int_0^tau c(I, X, S) dt] from (i, x, s) by simulating X directly.

    Raises:
        ExcessiveCensoring: if more than the configured share of paths reach the horizon
    """
    i, x, s = (float(v) for v in start)
    if not i <= x <= s:
        raise ValueError(f"start must satisfy i <= x <= s, got {start}")
    for point in (i, s):
        if not model.contains(point):
            raise ValueError(f"start point {point} lies outside the truncation {model.truncation}")

    def identity(v):
        return np.asarray(v, dtype=float)

    dynamics = _Dynamics(
        drift=model.mu,
        diffusion=model.sigma,
        diffusion_derivative=_numeric_derivative(model.sigma),
        to_x=identity,
        from_x=identity,
        start=(i, x, s),
        bounds=model.support,
        watch=model.truncation,
        x_bounds=model.support,
        running_cost=cost,
    )
    outcome = _run_blocks(dynamics, rule, config)
    report = LossReport(**_base_report(rule, outcome, config))
    logger.info("Range payoff %.5f (se %.5f), E tau %.4f", report.range_payoff, report.range_payoff_se,
                report.e_tau)
    return _finish(report, outcome, config)


def region_sequence_is_admissible(labels: Sequence[str]) -> bool:
    """
    Whether a region path of (I, X, S) is consistent with the optimal rule.

    It may start in C0, leaves C0 at most once and never returns, reaches C- or
    C+ before D, stays on that side, and D can only come last.
    """
    collapsed = [label for k, label in enumerate(labels) if k == 0 or label != labels[k - 1]]
    if not collapsed:
        return True
    stopped = collapsed[-1] == "D"
    if stopped:
        collapsed = collapsed[:-1]
    if "D" in collapsed:
        return False
    if collapsed and collapsed[0] == "C0":
        collapsed = collapsed[1:]
        if stopped and not collapsed:
            return False
    if "C0" in collapsed:
        return False
    return len(set(collapsed)) <= 1


def doob_type_check(model: TransformedModel, rules: Sequence[StoppingRule], config: PathConfig,
                    cost_constant: float = 1.0, start: Tuple[float, float, float] = (0.0, 0.0, 0.0)) -> pd.DataFrame:
    """
    Compare E(S_tau - I_tau) with sqrt(3) sqrt(E tau) for each rule.

    Columns: rule, mean_range, mean_range_se, e_tau, e_tau_se, bound, slack,
    slack_se, violated, cost_bound (c E tau + 3/(4c)).
    """
    cost = constant_cost(cost_constant)
    rows = []
    for rule in rules:
        report = simulate_range_objective(model, cost, start, rule, config)
        bound = float(np.sqrt(3.0 * report.e_tau))
        bound_se = float(np.sqrt(3.0) * report.e_tau_se / (2.0 * np.sqrt(report.e_tau))) if report.e_tau > 0 else 0.0
        slack = bound - report.mean_range
        slack_se = float(np.hypot(report.mean_range_se, bound_se))
        rows.append({
            "rule": rule.label,
            "mean_range": report.mean_range,
            "mean_range_se": report.mean_range_se,
            "e_tau": report.e_tau,
            "e_tau_se": report.e_tau_se,
            "bound": bound,
            "slack": slack,
            "slack_se": slack_se,
            "violated": bool(slack < -3.0 * slack_se - 1e-12),
            "cost_bound": cost_constant * report.e_tau + 3.0 / (4.0 * cost_constant),
        })
    return pd.DataFrame(rows)


def tune_quantile_rule(spec: DiffusionSpec, law: HiddenLevelLaw, cost_constant: float, config: PathConfig,
                       grid: Sequence[float] = QUANTILE_GRID) -> Tuple[float, pd.DataFrame]:
    """
    Grid search of q for the quantile_hit(q) baseline.

    Candidates whose runs censor too many paths are kept in the table but not chosen.

    Returns:
        Tuple (best q, DataFrame with columns q, combined, combined_se, censoring_rate, censored)
    """
    rows = []
    for q in grid:
        try:
            report = simulate_detection(spec, law, cost_constant, StoppingRule.quantile_hit(q), config)
            censored = False
        except ExcessiveCensoring as exc:
            report = exc.report
            censored = True
            logger.info("quantile %.2f skipped: censoring %.2f%%", q, 100.0 * report.censoring_rate)
        rows.append({"q": float(q), "combined": report.combined, "combined_se": report.combined_se,
                     "censoring_rate": report.censoring_rate, "censored": censored})
    table = pd.DataFrame(rows)
    usable = table[~table["censored"]]
    if usable.empty:
        raise ExcessiveCensoring("every quantile candidate censored too many paths; raise the horizon",
                                 report=table)
    best = float(usable.loc[usable["combined"].idxmin(), "q"])
    return best, table
