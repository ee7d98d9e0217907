"""
GCI Toolkit - Iterative Solvers
GSI, layered GCI and restarted GMRES against any linear operator

Every solver counts matrix-vector products (the cost unit L) and records the
relative residual delta = ||A u - f|| / ||f|| after each of them. Stopping is
checked after every product, so L need not be a multiple of the layer length.
"""

import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, aslinearoperator
from loguru import logger

from core.config import config, Constants
from core.exceptions import DimensionMismatch, InvalidSolveConfig, InvalidSchedule, ZeroMu
from iteration_schedules import IterationSchedule


@dataclass
class SolveConfig:
    """Stopping rule, matvec cap and starting point for a solve"""
    tol: float = field(default_factory=lambda: config.getfloat("SOLVERS", "TOL", 1e-5))
    max_matvecs: int = field(default_factory=lambda: config.getint("SOLVERS", "MAX_MATVECS", 5000))
    schedule: Optional[IterationSchedule] = None
    restart: Optional[int] = None
    initial_guess: Optional[np.ndarray] = None
    divergence_threshold: float = field(
        default_factory=lambda: config.getfloat("SOLVERS", "DIVERGENCE_THRESHOLD", 1e8))

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidSolveConfig(f"tol must be positive, got {self.tol}")
        if self.max_matvecs < 1:
            raise InvalidSolveConfig(f"max_matvecs must be at least 1, got {self.max_matvecs}")
        if self.restart is not None and self.restart < 1:
            raise InvalidSolveConfig(f"restart must be at least 1, got {self.restart}")


@dataclass
class CostModel:
    """T ~ L (T_A + T_0) + T_M and M ~ M_A + M_ITER, measured in seconds / complex words"""
    T_A_est: float
    T_0_est: float
    T_M_est: float
    M_iter_est: int
    M_A_est: Optional[int]
    log_factor: int

    def total_time(self, L: int) -> float:
        return L * (self.T_A_est + self.T_0_est) + self.T_M_est

    def to_dict(self) -> Dict[str, Any]:
        return {
            "T_A_est": self.T_A_est,
            "T_0_est": self.T_0_est,
            "T_M_est": self.T_M_est,
            "M_iter_est": self.M_iter_est,
            "M_A_est": self.M_A_est,
            "log_factor": self.log_factor,
        }


@dataclass
class SolveReport:
    """Outcome of one solve"""
    method: str
    solution: np.ndarray
    L: int
    residual_history: List[float]
    converged: bool
    wall_time: float
    cost_model: CostModel
    reason: str = ""

    @property
    def delta(self) -> float:
        return self.residual_history[-1]

    def layer_residuals(self, n: int) -> List[float]:
        """delta at layer boundaries (every n matvecs, starting with the initial residual)"""
        return self.residual_history[::n]


def prime_factor_sum(n: int) -> int:
    """Sum of the prime factors of n with multiplicity, e.g. 10**6 -> 42"""
    total, p = 0, 2
    while p * p <= n:
        while n % p == 0:
            total += p
            n //= p
        p += 1
    return total + (n if n > 1 else 0)


class _CountingOperator:
    """Wraps an operator, counting and timing its applications"""

    def __init__(self, op):
        self.op = op if isinstance(op, LinearOperator) else aslinearoperator(op)
        if self.op.shape[0] != self.op.shape[1]:
            raise DimensionMismatch(f"Operator must be square, got shape {self.op.shape}")
        self.dim = self.op.shape[0]
        self.calls = 0
        self.seconds = 0.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        start = time.perf_counter()
        y = np.asarray(self.op.matvec(x), dtype=complex).ravel()
        self.seconds += time.perf_counter() - start
        self.calls += 1
        return y

    def true_residual(self, x: np.ndarray, f: np.ndarray) -> np.ndarray:
        """f - A x, not counted in L; used only for the reported delta"""
        return f - np.asarray(self.op.matvec(x), dtype=complex).ravel()


def _operator_memory(op) -> Optional[int]:
    words = getattr(op, "memory_words", None)
    if words is not None:
        return int(words)
    if isinstance(op, np.ndarray):
        return int(op.size)
    return None


def _prepare(op, f, cfg: SolveConfig):
    A = _CountingOperator(op)
    f = np.asarray(f, dtype=complex).ravel()
    if f.shape[0] != A.dim:
        raise DimensionMismatch(f"Right-hand side has length {f.shape[0]}, operator dimension is {A.dim}")
    if cfg.initial_guess is None:
        u = np.zeros(A.dim, dtype=complex)
    else:
        u = np.array(cfg.initial_guess, dtype=complex).ravel()
        if u.shape[0] != A.dim:
            raise DimensionMismatch(f"Initial guess has length {u.shape[0]}, operator dimension is {A.dim}")
    return A, f, u


def _cost_model(op, A: _CountingOperator, wall_time: float, m_iter: int) -> CostModel:
    calls = max(A.calls, 1)
    return CostModel(
        T_A_est=A.seconds / calls,
        T_0_est=max(wall_time - A.seconds, 0.0) / calls,
        T_M_est=float(getattr(op, "build_seconds", 0.0)),
        M_iter_est=m_iter,
        M_A_est=_operator_memory(op),
        log_factor=prime_factor_sum(A.dim),
    )


def _stationary_solve(op, f, taus: np.ndarray, cfg: SolveConfig, method: str) -> SolveReport:
    """Layered iteration u <- u - tau_m (A u - f), parameters cycled per layer"""
    start = time.perf_counter()
    A, f, u = _prepare(op, f, cfg)
    n = len(taus)

    # initial residual: free for the zero guess
    r = A(u) - f if np.any(u) else -f
    f_norm = np.linalg.norm(f)
    norm_ref = f_norm if f_norm > 0 else np.linalg.norm(r)
    if norm_ref == 0:
        wall = time.perf_counter() - start
        return SolveReport(method, u, A.calls, [0.0], True, wall, _cost_model(op, A, wall, 4 * A.dim), "zero system")

    delta = np.linalg.norm(r) / norm_ref
    history = [float(delta)]
    reason = ""
    m = 0
    while delta > cfg.tol:
        if A.calls >= cfg.max_matvecs:
            reason = "max_matvecs reached"
            break
        u -= taus[m % n] * r
        r = A(u) - f
        delta = np.linalg.norm(r) / norm_ref
        history.append(float(delta))
        m += 1
        if not np.isfinite(delta) or delta > cfg.divergence_threshold:
            reason = "diverged"
            logger.warning(f"{method} diverged after {A.calls} matvecs (delta={delta:.3e})")
            break
        if m % n == 0:
            logger.debug(f"{method} layer {m // n}: delta={delta:.3e}")

    converged = bool(delta <= cfg.tol)
    wall = time.perf_counter() - start
    # u, r, f and one product buffer
    report = SolveReport(method, u, A.calls, history, converged, wall, _cost_model(op, A, wall, 4 * A.dim), reason)
    logger.info(f"{method} n={n}: L={report.L}, delta={report.delta:.3e}, converged={converged}")
    return report


def gsi_solve(op, f, mu: complex, cfg: Optional[SolveConfig] = None) -> SolveReport:
    """Generalized simple iteration u <- u - (1/mu)(A u - f)"""
    if mu == 0:
        raise ZeroMu("GSI parameter mu must be nonzero")
    cfg = cfg or SolveConfig()
    return _stationary_solve(op, f, np.array([1.0 / complex(mu)]), cfg, Constants.METHOD_GSI)


def gci_solve(op, f, schedule: IterationSchedule, cfg: Optional[SolveConfig] = None) -> SolveReport:
    """Generalized Chebyshev iteration: layers of the schedule's parameters"""
    if schedule.n < 1:
        raise InvalidSchedule("Schedule must hold at least one parameter")
    cfg = cfg or SolveConfig()
    return _stationary_solve(op, f, schedule.tau_array(), cfg, Constants.METHOD_GCI)


def _givens(a: complex, b: complex):
    """Rotation (c, s) with [[c, s], [-conj(s), c]] @ [a, b] = [*, 0]"""
    if b == 0:
        return 1.0, 0j
    if a == 0:
        return 0.0, 1.0 + 0j
    denom = np.hypot(abs(a), abs(b))
    c = abs(a) / denom
    s = (a / abs(a)) * np.conj(b) / denom
    return c, s


def gmres_solve(op, f, restart: int, cfg: Optional[SolveConfig] = None) -> SolveReport:
    """
    Restarted GMRES(restart): modified Gram-Schmidt Arnoldi with Givens
    rotations on the Hessenberg matrix.

    Within a cycle delta is the least-squares residual estimate; every restart
    forms the true residual with one (counted) product. The final entry of the
    history is always the true residual, checked with an uncounted product,
    and convergence is decided on it.
    """
    if restart < 1:
        raise InvalidSolveConfig(f"restart must be at least 1, got {restart}")
    cfg = cfg or SolveConfig()
    start = time.perf_counter()
    A, f, x = _prepare(op, f, cfg)
    reorth_threshold = config.getfloat("SOLVERS", "GMRES_REORTH_THRESHOLD", 1e-8)

    r = f - A(x) if np.any(x) else f.copy()
    beta = np.linalg.norm(r)
    f_norm = np.linalg.norm(f)
    norm_ref = f_norm if f_norm > 0 else beta
    m_iter = (restart + 3) * A.dim + (restart + 1) * restart
    if norm_ref == 0:
        wall = time.perf_counter() - start
        return SolveReport(Constants.METHOD_GMRES, x, A.calls, [0.0], True, wall,
                           _cost_model(op, A, wall, m_iter), "zero system")

    delta = beta / norm_ref
    history = [float(delta)]
    reason = ""
    breakdown = False
    estimated = False
    cycle = 0

    while delta > cfg.tol and not breakdown:
        if A.calls >= cfg.max_matvecs:
            reason = "max_matvecs reached"
            break
        V = np.zeros((restart + 1, A.dim), dtype=complex)
        H = np.zeros((restart + 1, restart), dtype=complex)
        cs = np.zeros(restart)
        sn = np.zeros(restart, dtype=complex)
        g = np.zeros(restart + 1, dtype=complex)
        g[0] = beta
        V[0] = r / beta
        k = 0

        for j in range(restart):
            if A.calls >= cfg.max_matvecs:
                break
            w = A(V[j])
            w_norm0 = np.linalg.norm(w)
            for i in range(j + 1):
                H[i, j] = np.vdot(V[i], w)
                w -= H[i, j] * V[i]
            h = np.linalg.norm(w)
            if h > 0 and np.max(np.abs(V[:j + 1].conj() @ w)) > reorth_threshold * h:
                # second Gram-Schmidt pass
                for i in range(j + 1):
                    correction = np.vdot(V[i], w)
                    H[i, j] += correction
                    w -= correction * V[i]
                h = np.linalg.norm(w)
            H[j + 1, j] = h

            for i in range(j):
                hi, hi1 = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * hi + sn[i] * hi1
                H[i + 1, j] = -np.conj(sn[i]) * hi + cs[i] * hi1
            cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -np.conj(sn[j]) * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1

            delta = abs(g[j + 1]) / norm_ref
            history.append(float(delta))
            estimated = True
            if h <=1e-14 * max(w_norm0, 1.0):
                breakdown = True
                reason = "breakdown: exact solution in Krylov space"
                break
            V[j + 1] = w / h
            if delta <= cfg.tol:
                break

        if k > 0:
            y = scipy.linalg.solve_triangular(H[:k, :k], g[:k])
            x = x + V[:k].T @ y
        cycle += 1
        logger.debug(f"GMRES({restart}) cycle {cycle}: delta={delta:.3e}, L={A.calls}")

        if delta <= cfg.tol or breakdown:
            delta = np.linalg.norm(A.true_residual(x, f)) / norm_ref
            history[-1] = float(delta)
            estimated = False
            if delta <= cfg.tol or breakdown:
                break
            logger.debug(f"GMRES({restart}) estimate below tol but true delta={delta:.3e}; restarting")
        if A.calls >= cfg.max_matvecs:
            reason = "max_matvecs reached"
            break
        r = f - A(x)
        beta = np.linalg.norm(r)
        delta = beta / norm_ref
        history.append(float(delta))
        estimated = False
        if not np.isfinite(delta) or delta > cfg.divergence_threshold:
            reason = "diverged"
            break

    if estimated:
        delta = np.linalg.norm(A.true_residual(x, f)) / norm_ref
        history[-1] = float(delta)
    converged = bool(delta <= cfg.tol)
    wall = time.perf_counter() - start
    report = SolveReport(Constants.METHOD_GMRES, x, A.calls, history, converged, wall,
                         _cost_model(op, A, wall, m_iter), reason)
    logger.info(f"GMRES({restart}): L={report.L}, delta={report.delta:.3e}, converged={converged}")
    return report


def solve(method: str, op, f, cfg: SolveConfig, mu: Optional[complex] = None) -> SolveReport:
    """Dispatch on method name: GSI needs mu (or a schedule), GCI a schedule, GMRES a restart"""
    method = method.upper()
    if method == Constants.METHOD_GSI:
        if mu is None:
            if cfg.schedule is None:
                raise InvalidSolveConfig("GSI needs mu or a schedule")
            mu = cfg.schedule.mus[0]
        return gsi_solve(op, f, mu, cfg)
    if method == Constants.METHOD_GCI:
        if cfg.schedule is None:
            raise InvalidSolveConfig("GCI needs a schedule")
        return gci_solve(op, f, cfg.schedule, cfg)
    if method == Constants.METHOD_GMRES:
        if cfg.restart is None:
            raise InvalidSolveConfig("GMRES needs a restart dimension")
        return gmres_solve(op, f, cfg.restart, cfg)
    raise InvalidSolveConfig(f"Unknown method {method}; expected one of {Constants.METHODS}")


__all__ = [
    'SolveConfig',
    'CostModel',
    'SolveReport',
    'prime_factor_sum',
    'gsi_solve',
    'gci_solve',
    'gmres_solve',
    'solve',
]
