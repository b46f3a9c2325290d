"""Trajectory-level diagnostics: simulation, Lyapunov spectra, parameter
sweeps, basins of attraction and comparison measures.

All routines treat the model as a black-box piecewise map; the only structure
used is the per-region Jacobian (for Lyapunov exponents) and vectorized
stepping (for basins and sweeps).
"""
from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import DivergenceError
from .models import PiecewiseModel

__all__ = [
    "simulate",
    "LyapunovResult",
    "lyapunov_exponents",
    "set_param",
    "get_param",
    "SweepPoint",
    "bifurcation_sweep",
    "AttractorRef",
    "BasinResult",
    "basin_grid",
    "state_space_divergence",
    "prediction_error",
    "prediction_error_curve",
]

DIVERGENCE_NORM = 1e8


def simulate(
    model: PiecewiseModel,
    z0: np.ndarray,
    T: int,
    *,
    transient: int = 0,
) -> np.ndarray:
    """Orbit of length ``T`` after discarding ``transient`` steps.

    Raises :class:`DivergenceError` (carrying the partial orbit and the step
    index) when the state norm exceeds ``1e8``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if transient < 0:
        raise ValueError("transient must be non-negative")
    z = model.validate_point(np.asarray(z0, dtype=float))
    for t in range(transient):
        z = model.step(z)
        if not np.all(np.isfinite(z)) or np.linalg.norm(z) > DIVERGENCE_NORM:
            raise DivergenceError(
                f"orbit diverged during transient at step {t}",
                partial=np.asarray([z]), step=t,
            )
    out = np.empty((T, model.dim))
    out[0] = z
    for t in range(1, T):
        z = model.step(z)
        if not np.all(np.isfinite(z)) or np.linalg.norm(z) > DIVERGENCE_NORM:
            raise DivergenceError(
                f"orbit diverged at step {transient + t}",
                partial=out[:t].copy(), step=transient + t,
            )
        out[t] = z
    return out


@dataclass(frozen=True)
class LyapunovResult:
    exponents: np.ndarray  # descending
    mean_log_abs_det: float  # average one-step log |det J| along the orbit
    n_steps: int

    @property
    def largest(self) -> float:
        return float(self.exponents[0])


def lyapunov_exponents(
    model: PiecewiseModel,
    z0: np.ndarray,
    T: int,
    *,
    transient: int = 100,
    reorth_every: int = 10,
) -> LyapunovResult:
    """Full Lyapunov spectrum by QR reorthonormalization.

    Tangent vectors are pushed with the per-region Jacobian and
    re-orthonormalized every ``reorth_every`` steps; the sum of exponents
    equals the orbit average of ``log |det J|`` (volume identity), which is
    returned alongside for validation.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    z = model.validate_point(np.asarray(z0, dtype=float))
    for t in range(transient):
        z = model.step(z)
        if not np.all(np.isfinite(z)) or np.linalg.norm(z) > DIVERGENCE_NORM:
            raise DivergenceError(
                f"orbit diverged during transient at step {t}",
                partial=np.asarray([z]), step=t,
            )
    M = model.dim
    V = np.eye(M)
    acc = np.zeros(M)
    log_det_sum = 0.0
    for t in range(T):
        J = model.affine_piece(model.region_of(z)).J
        sign, logabs = np.linalg.slogdet(J)
        log_det_sum += logabs if sign != 0.0 else -690.0  # log(1e-300)
        V = J @ V
        if (t + 1) % reorth_every == 0 or t == T - 1:
            Q, R = np.linalg.qr(V)
            diag = np.abs(np.diag(R))
            acc += np.log(np.maximum(diag, 1e-300))
            V = Q
        z = model.step(z)
        if not np.all(np.isfinite(z)) or np.linalg.norm(z) > DIVERGENCE_NORM:
            raise DivergenceError(
                f"orbit diverged at step {transient + t}",
                partial=np.asarray([z]), step=transient + t,
            )
    return LyapunovResult(np.sort(acc / T)[::-1], log_det_sum / T, T)


# -- parameter access -------------------------------------------------------

_PARAM_RE = re.compile(r"^(\w+)(?:\[(\d+)(?:\s*,\s*(\d+))?\])?$")


def _parse_param(path: str) -> tuple[str, tuple[int, ...] | None]:
    mobj = _PARAM_RE.match(path.strip())
    if mobj is None:
        raise ValueError(
            f"cannot parse parameter path {path!r}; expected 'name', "
            f"'name[i]' or 'name[i,j]'"
        )
    name, i, j = mobj.groups()
    if i is None:
        return name, None
    return name, ((int(i),) if j is None else (int(i), int(j)))


def get_param(model, path: str) -> float:
    """Read a scalar model parameter by path, e.g. ``h1``, ``A[0,1]``."""
    name, idx = _parse_param(path)
    value = getattr(model, name)
    if idx is None:
        if np.ndim(value) != 0:
            raise ValueError(f"{name} is not scalar; index it, e.g. {name}[0]")
        return float(value)
    return float(np.asarray(value)[idx])


def set_param(model, path: str, value: float):
    """Copy of ``model`` with one scalar parameter replaced."""
    name, idx = _parse_param(path)
    if not hasattr(model, name):
        raise ValueError(f"model has no parameter {name!r}")
    current = getattr(model, name)
    if idx is None:
        if np.ndim(current) != 0:
            raise ValueError(f"{name} is not scalar; index it, e.g. {name}[0]")
        return replace(model, **{name: float(value)})
    arr = np.array(current, dtype=float, copy=True)
    arr[idx] = float(value)
    return replace(model, **{name: arr})


@dataclass(frozen=True)
class SweepPoint:
    value: float
    states: np.ndarray  # (n_keep, M) post-transient samples; empty if diverged
    diverged: bool


def bifurcation_sweep(
    model: PiecewiseModel,
    param: str,
    values: np.ndarray,
    z0: np.ndarray,
    *,
    T: int = 1000,
    transient: int = 500,
    n_keep: int = 100,
    ic_policy: str = "follow",
    seed: int | None = None,
    n_threads: int = 1,
) -> list[SweepPoint]:
    """Long-run states of the model across a parameter path.

    ``ic_policy``: "fixed" restarts each value from ``z0``, "follow" continues
    from the previous value's end state (sequential by construction),
    "random" draws a fresh start per value from a seeded generator.
    """
    if ic_policy not in ("fixed", "follow", "random"):
        raise ValueError("ic_policy must be 'fixed', 'follow' or 'random'")
    if n_keep > T:
        raise ValueError("n_keep cannot exceed T")
    if n_threads > 1 and ic_policy == "follow":
        raise ValueError("ic_policy 'follow' is sequential; use n_threads=1")
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    z0 = np.asarray(z0, dtype=float)
    ics = [z0] * len(values)
    if ic_policy == "random":
        ics = [rng.standard_normal(model.dim) for _ in values]

    def run_one(iv: tuple[int, float]) -> SweepPoint:
        i, v = iv
        mod = set_param(model, param, v)
        try:
            traj = simulate(mod, ics[i], T, transient=transient)
        except DivergenceError:
            return SweepPoint(float(v), np.zeros((0, model.dim)), True)
        return SweepPoint(float(v), traj[-n_keep:].copy(), False)

    if ic_policy == "follow":
        out: list[SweepPoint] = []
        z = z0
        for v in values:
            mod = set_param(model, param, float(v))
            try:
                traj = simulate(mod, z, T, transient=transient)
            except DivergenceError:
                out.append(SweepPoint(float(v), np.zeros((0, model.dim)), True))
                z = z0  # restart continuation after a divergent window
                continue
            out.append(SweepPoint(float(v), traj[-n_keep:].copy(), False))
            z = traj[-1]
        return out
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as ex:
            return list(ex.map(run_one, enumerate(values)))
    return [run_one(iv) for iv in enumerate(values)]


# -- basins -----------------------------------------------------------------

@dataclass(frozen=True)
class AttractorRef:
    """Reference cloud used to decide convergence onto one attractor."""

    id: int
    points: np.ndarray  # (n, M)
    tol: float = 1e-4

    @classmethod
    def from_cycle(cls, cycle, id: int, tol: float = 1e-4) -> "AttractorRef":
        return cls(id, np.asarray(cycle.points, dtype=float), tol)

    @classmethod
    def from_trajectory(
        cls, traj: np.ndarray, id: int, tol: float = 1e-4, max_points: int = 5000
    ) -> "AttractorRef":
        traj = np.asarray(traj, dtype=float)
        if len(traj) > max_points:
            # Decimate with a seeded random subset rather than a fixed stride:
            # orbits often visit regions with a short period, and a stride that
            # divides it keeps only one band of the attractor.
            idx = np.random.default_rng(0).choice(len(traj), max_points, replace=False)
            traj = traj[np.sort(idx)]
        return cls(id, traj, tol)


@dataclass
class BasinResult:
    labels: np.ndarray  # (res_x, res_y): attractor id, -2 divergent, -1 undecided
    xs: np.ndarray
    ys: np.ndarray
    n_steps: int

    def counts(self) -> dict[int, int]:
        vals, cnts = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, cnts)}

    def boundary_mask(self) -> np.ndarray:
        """Cells adjacent (4-neighborhood) to a differently labeled cell."""
        lab = self.labels
        mask = np.zeros_like(lab, dtype=bool)
        mask[:-1, :] |= lab[:-1, :] != lab[1:, :]
        mask[1:, :] |= lab[1:, :] != lab[:-1, :]
        mask[:, :-1] |= lab[:, :-1] != lab[:, 1:]
        mask[:, 1:] |= lab[:, 1:] != lab[:, :-1]
        return mask


def basin_grid(
    model: PiecewiseModel,
    attractors: list[AttractorRef],
    bounds: tuple[float, float, float, float],
    res: int,
    *,
    max_steps: int = 2000,
    check_every: int = 10,
) -> BasinResult:
    """Label a 2-D grid of initial conditions by the attractor they reach.

    Cells are iterated in a single vectorized batch; every ``check_every``
    steps the still-undecided cells are tested against each reference cloud
    with a KD-tree. Cells exceeding the divergence norm get label -2; cells
    never decided keep -1.
    """
    if model.dim != 2:
        raise ValueError("basin_grid requires a two-dimensional model")
    if not attractors:
        raise ValueError("at least one attractor reference is required")
    ids = [a.id for a in attractors]
    if len(set(ids)) != len(ids):
        raise ValueError("attractor ids must be unique")
    x0, x1, y0, y1 = bounds
    xs = np.linspace(x0, x1, res)
    ys = np.linspace(y0, y1, res)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Z = np.column_stack([X.ravel(), Y.ravel()])
    n = len(Z)
    labels = np.full(n, -1, dtype=int)
    trees = [(a.id, cKDTree(a.points), a.tol) for a in attractors]

    undecided = np.arange(n)
    steps_done = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for step_i in range(1, max_steps + 1):
            Z[undecided] = model.step_batch(Z[undecided])
            steps_done = step_i
            if step_i % check_every == 0 or step_i == max_steps:
                cur = Z[undecided]
                bad = ~np.all(np.isfinite(cur), axis=1) | (
                    np.linalg.norm(cur, axis=1) > DIVERGENCE_NORM
                )
                labels[undecided[bad]] = -2
                still = ~bad
                for aid, tree, tol in trees:
                    if not np.any(still):
                        break
                    sub = undecided[still]
                    hit = tree.query(Z[sub])[0] <= tol
                    labels[sub[hit]] = aid
                    still[np.flatnonzero(still)[hit]] = False
                undecided = undecided[labels[undecided] == -1]
                if len(undecided) == 0:
                    break
    return BasinResult(labels.reshape(res, res), xs, ys, steps_done)


# -- comparison measures ----------------------------------------------------

def state_space_divergence(
    true_traj: np.ndarray,
    gen_traj: np.ndarray,
    *,
    n_bins: int = 30,
    pad: float = 0.05,
    eps: float = 1e-12,
) -> float:
    """KL divergence between binned state occupation of two orbits.

    The binning box is the bounding box of the reference orbit padded by
    ``pad`` on each side; both histograms are smoothed by ``eps`` and
    renormalized before taking the divergence.
    """
    true_traj = np.asarray(true_traj, dtype=float)
    gen_traj = np.asarray(gen_traj, dtype=float)
    if true_traj.ndim != 2 or gen_traj.ndim != 2:
        raise ValueError("trajectories must be 2-D arrays (T, M)")
    dim = true_traj.shape[1]
    if gen_traj.shape[1] != dim:
        raise ValueError("trajectories must share their state dimension")
    if n_bins**dim > 10_000_000:
        raise ValueError(
            f"{n_bins} bins over {dim} dimensions is too fine; reduce n_bins"
        )
    lo = true_traj.min(axis=0)
    hi = true_traj.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    edges = [
        np.linspace(lo[k] - pad * span[k], hi[k] + pad * span[k], n_bins + 1)
        for k in range(dim)
    ]
    p, _ = np.histogramdd(true_traj, bins=edges)
    q, _ = np.histogramdd(gen_traj, bins=edges)
    p = p.ravel() + eps
    q = q.ravel() + eps
    p /= p.sum()
    q /= q.sum()
    return float(np.sum(p * np.log(p / q)))


def prediction_error(model: PiecewiseModel, traj: np.ndarray, n: int) -> float:
    """Mean squared ``n``-step-ahead error of the model along an orbit.

    Every state is used as a start; the error at horizon ``n`` is averaged
    over time and state dimension. Zero horizon gives exactly zero.
    """
    traj = np.asarray(traj, dtype=float)
    if traj.ndim != 2:
        raise ValueError("traj must be a 2-D array (T, M)")
    T = len(traj)
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 0.0
    if n >= T:
        raise ValueError(f"horizon {n} needs a trajectory longer than {T}")
    pred = traj[: T - n].copy()
    for _ in range(n):
        pred = model.step_batch(pred)
    diff = pred - traj[n:]
    return float(np.mean(diff**2))


def prediction_error_curve(
    model: PiecewiseModel, traj: np.ndarray, n_max: int
) -> np.ndarray:
    """Prediction error at horizons ``0 .. n_max`` (one batched pass)."""
    traj = np.asarray(traj, dtype=float)
    T = len(traj)
    if n_max >= T:
        raise ValueError(f"n_max {n_max} needs a trajectory longer than {T}")
    out = np.zeros(n_max + 1)
    pred = traj[:-1].copy()  # images of traj[0 : T-n] as n advances
    for n in range(1, n_max + 1):
        pred = model.step_batch(pred)
        out[n] = float(np.mean((pred - traj[n:]) ** 2))
        pred = pred[:-1]
    return out
