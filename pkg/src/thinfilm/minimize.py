"""Sphere-constrained descent for the reduced energy F_eps = L_eps - N."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from . import field_energy as fe
from .field_energy import EnergyBreakdown, Magnetization2D, PairOperator
from .geometry import DomainMask
from .params import ParameterSet


class RetractionError(ValueError):
    pass


INIT_KINDS = ("uniform_up", "uniform_down", "random_unit", "bubble", "from_snapshot", "field")


@dataclass(frozen=True)
class MinimizeConfig:
    max_iter: int = 2000
    grad_tol: float = 1e-8
    initial_step: float = 1e-3
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 40
    energy_rtol: float = 1e-12
    patience: int = 50
    precondition: bool = True
    init: str = "uniform_up"
    seed: int = 0

    def __post_init__(self):
        if not (self.grad_tol > 0 and self.initial_step > 0 and self.energy_rtol >= 0):
            raise ValueError("tolerances and step size must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtracking factor must lie in (0, 1)")
        if self.init not in INIT_KINDS:
            raise ValueError(f"unknown initialization {self.init!r}")


TRACE_COLUMNS = ("iteration", "F_eps", "L_eps", "N", "bv_norm", "grad_norm", "step")


@dataclass
class MinimizeTrace:
    rows: list = field(default_factory=list)
    final: Magnetization2D | None = None
    reason: str = ""
    init: str = ""

    @property
    def energies(self) -> np.ndarray:
        return np.array([r["F_eps"] for r in self.rows])

    @property
    def final_energy(self) -> float:
        return self.rows[-1]["F_eps"]

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for r in self.rows:
                w.writerow([r["iteration"]] + [repr(float(r[c])) for c in TRACE_COLUMNS[1:]])
        return path


def renormalize(m: Magnetization2D | np.ndarray, mask: DomainMask | None = None) -> Magnetization2D:
    """Project every inside cell back to the unit sphere."""
    if isinstance(m, Magnetization2D):
        mask, v = m.mask, m.values
    else:
        v = np.asarray(m, dtype=float)
    norm = np.linalg.norm(v, axis=0)
    ins = mask.inside
    if np.any(norm[ins] < 0.5):
        raise RetractionError("cell norm dropped below 0.5; step too large")
    out = np.where(ins, v / np.where(ins, norm, 1.0), 0.0)
    return Magnetization2D(mask, out)


class _Objective:
    """F_eps and its Euclidean gradient on raw (3, ny, nx) arrays."""

    def __init__(self, mask: DomainMask, p: ParameterSet, R: float | None = None):
        self.mask = mask
        self.p = p
        self.op = PairOperator(mask, "newton", R)

    def value_and_grad(self, v: np.ndarray):
        m = Magnetization2D(self.mask, v, check=False)
        L = fe.local_energy_L(m, self.p)
        a = m.m3
        ka = self.op.conv(a)
        ins = self.mask.inside
        N = 0.25 * float(np.sum((a * a * self.op.k_chi)[ins]) - np.sum((a * ka)[ins]))
        g = fe.local_energy_gradient(m, self.p)
        g[2] -= np.where(ins, 0.5 * (a * self.op.k_chi - ka), 0.0)
        return L - N, L, N, g


class _Preconditioner:
    """Inverse of a*I + b*(-Laplacian) on the bounding grid with Neumann ends.

    a and b match the anisotropy and exchange curvatures of L_eps, which
    dominate the stiffness of the problem on fine grids.
    """

    def __init__(self, mask: DomainMask, p: ParameterSet):
        a = p.log_eps * mask.h**2 / p.epsilon
        b = p.log_eps * p.epsilon
        lx = 2.0 - 2.0 * np.cos(np.pi * np.arange(mask.nx) / mask.nx)
        ly = 2.0 - 2.0 * np.cos(np.pi * np.arange(mask.ny) / mask.ny)
        self.inv = 1.0 / (a + b * (ly[:, None] + lx[None, :]))
        self.inside = mask.inside

    def __call__(self, g: np.ndarray) -> np.ndarray:
        out = sfft.idctn(sfft.dctn(g, type=2, axes=(1, 2), norm="ortho") * self.inv, type=2, axes=(1, 2), norm="ortho")
        out[:, ~self.inside] = 0.0
        return out


def _project(v, g):
    return g - np.sum(g * v, axis=0) * v


def gradient_F(m: Magnetization2D, p: ParameterSet, projected: bool = True, R: float | None = None) -> np.ndarray:
    """Gradient of the discrete F_eps, projected onto the tangent spaces of the sphere."""
    _, _, _, g = _Objective(m.mask, p, R).value_and_grad(m.values)
    return _project(m.values, g) if projected else g


def _initial_field(mask: DomainMask, cfg: MinimizeConfig, p: ParameterSet, init_field=None, layout=None, path=None):
    if cfg.init == "uniform_up":
        return Magnetization2D.uniform(mask, (0, 0, 1))
    if cfg.init == "uniform_down":
        return Magnetization2D.uniform(mask, (0, 0, -1))
    if cfg.init == "random_unit":
        return Magnetization2D.random_unit(mask, np.random.default_rng(cfg.seed))
    if cfg.init == "bubble":
        from .profiles import multi_bubble_field

        if layout is None:
            raise ValueError("bubble initialization needs a layout")
        return multi_bubble_field(layout, p.epsilon)
    if cfg.init == "from_snapshot":
        from .snapshot import load

        return load(path)[0]
    if init_field is None:
        raise ValueError("field initialization needs a field")
    return init_field


def minimize(m0: Magnetization2D, p: ParameterSet, cfg: MinimizeConfig = MinimizeConfig(), R: float | None = None) -> MinimizeTrace:
    """Projected gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.

    Every accepted step lowers F_eps; iterates are retracted to the sphere by
    cellwise normalization.
    """
    mask = m0.mask
    obj = _Objective(mask, p, R)
    v = np.array(m0.values)
    F, L, N, g = obj.value_and_grad(v)
    pc = _Preconditioner(mask, p) if cfg.precondition else None

    def direction(v, g):
        pg = _project(v, g)
        return pg, (_project(v, pc(pg)) if pc else pg)

    pg, d = direction(v, g)
    step = cfg.initial_step
    trace = MinimizeTrace(init=cfg.init)

    def record(it, F, L, N, pg, step, v):
        m = Magnetization2D(mask, v, check=False)
        bv = fe.bv_norm(m)
        trace.rows.append(
            {"iteration": it, "F_eps": F, "L_eps": L, "N": N, "bv_norm": bv, "grad_norm": float(np.linalg.norm(pg)), "step": step}
        )
        fe._notify(m, EnergyBreakdown(L_eps=L, N=N, F_eps=F, bv_norm=bv, area=mask.area()))

    record(0, F, L, N, pg, 0.0, v)
    reason = "max_iter"
    stagnant = 0
    prev_v = prev_d = None
    for it in range(1, cfg.max_iter + 1):
        if float(np.linalg.norm(pg)) <= cfg.grad_tol:
            reason = "converged"
            break
        slope = float(np.sum(pg * d))
        if prev_v is not None:
            s = v - prev_v
            y = d - prev_d
            sy = float(np.sum(s * y))
            if sy > 0:
                step = float(np.sum(s * s)) / sy
        accepted = False
        trial = step
        for _ in range(cfg.max_backtracks):
            w = v - trial * d
            norm = np.linalg.norm(w, axis=0)
            w = np.where(mask.inside, w / np.where(mask.inside, norm, 1.0), 0.0)
            Fn, Ln, Nn, gnew = obj.value_and_grad(w)
            if Fn <= F - cfg.armijo * trial * slope:
                accepted = True
                break
            trial *= cfg.backtrack
        if not accepted:
            reason = "stalled"
            break
        prev_v, prev_d = v, d
        dF = F - Fn
        v, F, L, N, g = w, Fn, Ln, Nn, gnew
        pg, d = direction(v, g)
        step = trial
        record(it, F, L, N, pg, trial, v)
        stagnant = stagnant + 1 if dF <= cfg.energy_rtol * max(abs(F), 1e-300) else 0
        if stagnant >= cfg.patience:
            reason = "stagnated"
            break
    trace.final = renormalize(v, mask)
    trace.reason = reason
    return trace


def minimize_multistart(
    mask: DomainMask,
    p: ParameterSet,
    cfg: MinimizeConfig = MinimizeConfig(),
    inits=("uniform_up", "uniform_down", "random_unit"),
    seeds=(0,),
    layout=None,
    R: float | None = None,
) -> tuple[MinimizeTrace, list[MinimizeTrace]]:
    """Run several starts and return the lowest-energy trace and all traces."""
    traces = []
    for kind in inits:
        for seed in seeds if kind == "random_unit" else (cfg.seed,):
            c = MinimizeConfig(**{**cfg.__dict__, "init": kind, "seed": seed})
            m0 = _initial_field(mask, c, p, layout=layout)
            traces.append(minimize(m0, p, c, R=R))
    best = min(traces, key=lambda t: t.final_energy)
    return best, traces
