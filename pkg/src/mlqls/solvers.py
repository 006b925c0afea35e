"""Pluggable sub-QUBO solvers.

Three backends: exact Gray-code enumeration (the only one allowed to claim
optimality), best-of-N simulated annealing, and an external command speaking
the JSON protocol on stdin/stdout. The reported energy is always recomputed
locally from the returned spins; whatever a backend believes about its own
energy is ignored.
"""

from __future__ import annotations

import json
import subprocess
import threading
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import anneal_best_of, gray_ground_state
from .subqubo import SubQubo

__all__ = [
    "SolveResult",
    "SAParams",
    "SolverConfig",
    "ExternalSolverError",
    "SolverTimeoutError",
    "SolverProcessError",
    "SolverResponseError",
    "solve_exhaustive",
    "solve_sa",
    "solve_external",
    "set_external_limit",
    "make_solver",
]

EXHAUSTIVE_CAP = 26


class ExternalSolverError(RuntimeError):
    """Base class for external-solver failures."""


class SolverTimeoutError(ExternalSolverError):
    pass


class SolverProcessError(ExternalSolverError):
    pass


class SolverResponseError(ExternalSolverError):
    pass


@dataclass
class SolveResult:
    spins: np.ndarray  # int8 over {-1,+1}
    energy: float  # sub-QUBO energy including constant, recomputed locally
    samples_taken: int
    proven_optimal: bool


@dataclass(frozen=True)
class SAParams:
    num_samples: int = 1000
    sweeps: int = 50
    t_hot: float | None = None  # default: max|coefficient| * k
    t_cold: float | None = None  # default: 0.01 * min nonzero |coefficient|
    seed: int = 0


def solve_exhaustive(q: SubQubo, cap: int = EXHAUSTIVE_CAP) -> SolveResult:
    """Proven global minimum by Gray-code scan of all 2^k spin vectors."""
    k = q.k
    if k > cap:
        raise ValueError(f"exhaustive solve of k={k} exceeds cap {cap}")
    if k == 0:
        return SolveResult(np.zeros(0, np.int8), q.constant, 1, True)
    split = 6 if k >= 18 else 0
    _, best_t = gray_ground_state(
        np.ascontiguousarray(q.quadratic), np.ascontiguousarray(q.linear), split)
    code = best_t ^ (best_t >> 1)
    spins = np.where((code >> np.arange(k)) & 1, 1, -1).astype(np.int8)
    return SolveResult(spins, q.energy(spins), 2 ** k, True)


def solve_sa(q: SubQubo, params: SAParams = SAParams()) -> SolveResult:
    """Best-of-N simulated annealing with a geometric temperature schedule."""
    if params.num_samples < 1 or params.sweeps < 0:
        raise ValueError("num_samples must be >= 1 and sweeps >= 0")
    k = q.k
    coeffs = np.abs(np.concatenate([q.quadratic.ravel(), q.linear]))
    nonzero = coeffs[coeffs > 0]
    if len(nonzero) == 0:
        # flat landscape: any spins attain the constant
        rng = np.random.default_rng(params.seed)
        spins = (rng.integers(0, 2, size=k) * 2 - 1).astype(np.int8)
        return SolveResult(spins, q.energy(spins), params.num_samples, False)
    t_hot = params.t_hot if params.t_hot is not None else float(coeffs.max()) * k
    t_cold = params.t_cold if params.t_cold is not None else 0.01 * float(nonzero.min())
    if params.sweeps == 0:
        temps = np.zeros(0)  # best of N bare random samples
    elif params.sweeps == 1:
        temps = np.array([t_hot])
    else:
        temps = t_hot * (t_cold / t_hot) ** (
            np.arange(params.sweeps) / (params.sweeps - 1))
    _, s = anneal_best_of(
        np.ascontiguousarray(q.quadratic), np.ascontiguousarray(q.linear),
        temps, params.num_samples, params.seed)
    spins = s.astype(np.int8)
    return SolveResult(spins, q.energy(spins), params.num_samples, False)


_external_sem = threading.BoundedSemaphore(4)


def set_external_limit(n: int) -> None:
    """Bound the number of concurrently running external solver processes."""
    global _external_sem
    _external_sem = threading.BoundedSemaphore(n)


def solve_external(q: SubQubo, cmd: str, timeout: float | None = 60.0) -> SolveResult:
    """Run ``cmd`` with the sub-QUBO JSON on stdin.

    The command must print {"spins": [k values in {-1,1}]} on stdout and exit
    0. Timeouts, nonzero exits, and malformed responses raise distinct
    exceptions; any reported energy is discarded in favor of the local
    re-evaluation.
    """
    payload = q.to_json().encode()
    with _external_sem:
        try:
            proc = subprocess.run(
                cmd, shell=True, input=payload, capture_output=True,
                timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            raise SolverTimeoutError(f"external solver timed out after {timeout}s") \
                from exc
    if proc.returncode != 0:
        raise SolverProcessError(
            f"external solver exited {proc.returncode}: "
            f"{proc.stderr.decode(errors='replace')[:500]}")
    try:
        doc = json.loads(proc.stdout.decode())
    except (ValueError, UnicodeDecodeError) as exc:
        raise SolverResponseError(f"unparseable solver response: {exc}") from exc
    if not isinstance(doc, dict) or "spins" not in doc:
        raise SolverResponseError("solver response lacks 'spins'")
    spins = np.asarray(doc["spins"])
    if spins.shape != (q.k,):
        raise SolverResponseError(
            f"expected {q.k} spins, got shape {spins.shape}")
    if not np.all(np.isin(spins, (-1, 1))):
        raise SolverResponseError("spins must be -1 or +1")
    spins = spins.astype(np.int8)
    samples = int(doc.get("samples_taken", 1))
    return SolveResult(spins, q.energy(spins), samples, False)


@dataclass(frozen=True)
class SolverConfig:
    """Which backend to run and with what parameters."""

    name: str  # exhaustive | sa | external
    sa: SAParams = SAParams()
    external_cmd: str | None = None
    external_timeout: float | None = 60.0
    exhaustive_cap: int = EXHAUSTIVE_CAP

    def __post_init__(self):
        if self.name not in ("exhaustive", "sa", "external"):
            raise ValueError(f"unknown solver {self.name!r}")
        if self.name == "external" and not self.external_cmd:
            raise ValueError("external solver needs external_cmd")

    @property
    def deterministic(self) -> bool:
        return self.name == "exhaustive"


def make_solver(cfg: SolverConfig):
    """Adapter: (SubQubo, rng) -> SolveResult.

    Stochastic backends draw a fresh seed from ``rng`` per call, keeping
    whole runs reproducible from one master seed.
    """
    if cfg.name == "exhaustive":
        def run(q: SubQubo, rng: np.random.Generator) -> SolveResult:
            return solve_exhaustive(q, cap=cfg.exhaustive_cap)
    elif cfg.name == "sa":
        def run(q: SubQubo, rng: np.random.Generator) -> SolveResult:
            seed = int(rng.integers(0, 2 ** 31 - 1))
            return solve_sa(q, replace(cfg.sa, seed=seed))
    else:
        def run(q: SubQubo, rng: np.random.Generator) -> SolveResult:
            return solve_external(q, cfg.external_cmd, cfg.external_timeout)
    return run
