"""Glue for closed-loop string experiments: design, initialize, simulate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closed_loop import ClosedLoop, assemble_dynamic
from .discretize import DiscretePlant, discretize
from .integrator import InitialCondition, SimConfig, Trajectory, simulate
from .model import string_plant
from .shaping import Controller, build_patch_map, casimir_init, design_controller
from .spectrum import PoleSet, leaf_poles, spillover_assembly


def string_discretization(p=50, gamma=0.5, length=2.0, tension=1.4e6, density=1.225,
                          damping=1e-3) -> DiscretePlant:
    return discretize(string_plant(length, tension, density, damping), p, gamma)


@dataclass
class RunResult:
    plant: DiscretePlant
    controller: Controller
    loop: ClosedLoop
    trajectory: Trajectory
    x0: np.ndarray

    def poles(self, meta=None) -> PoleSet:
        return leaf_poles(self.loop, meta)


def initial_state(plant: DiscretePlant, ctrl: Controller, ic: InitialCondition,
                  convention: str = "integral"):
    """``[x1d, 0, xc]`` with ``xc`` on the zero Casimir leaf."""
    x1 = ic.x1d(plant.p, plant.length, convention)
    xc = casimir_init(ctrl.Bc, ctrl.patch, plant.B0d, plant.Ji, x1)
    return np.concatenate([x1, np.zeros(plant.p), xc])


def run_closed_loop(plant: DiscretePlant, ctrl: Controller, ic: InitialCondition,
                    cfg: SimConfig, convention: str = "integral") -> RunResult:
    """Simulate the dynamic interconnection of ``ctrl`` with ``plant``.

    If the controller's patch map was built for a different element count
    (a coarse design applied to a finer plant), the patch map is rebuilt.
    """
    if ctrl.patch.p == plant.p:
        loop = assemble_dynamic(plant, ctrl)
        used = ctrl
    else:
        loop = spillover_assembly(plant, ctrl)
        used = Controller(ctrl.Bc, ctrl.Qc, ctrl.Dc, build_patch_map(plant.p, ctrl.m),
                          ctrl.residual)
    x0 = initial_state(plant, used, ic, convention)
    traj = simulate(loop, x0, cfg, convention=convention, L_ab=plant.L_ab)
    return RunResult(plant=plant, controller=used, loop=loop, trajectory=traj, x0=x0)


def string_closed_loop(p=50, m=None, alpha=4000.0, beta=5e6, cfg: SimConfig | None = None,
                       ic: InitialCondition | None = None, p_sim=None, gamma=0.5) -> RunResult:
    """Design on a ``p``-element string and simulate on ``p_sim`` elements (default ``p``)."""
    plant = string_discretization(p, gamma)
    ctrl = design_controller(plant, m or p, alpha, beta=beta)
    sim_plant = plant if p_sim in (None, p) else string_discretization(p_sim, gamma)
    return run_closed_loop(sim_plant, ctrl, ic or InitialCondition(), cfg or SimConfig())
