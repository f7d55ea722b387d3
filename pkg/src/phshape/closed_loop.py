"""Plant/controller interconnection.

Two equivalent views of the same loop are provided. The dynamic form
keeps the controller state ``xc`` and has dimension ``2p + m``. The reduced
form eliminates ``xc`` through the Casimir ``xc = Bc M^T B0d^T Ji^{-1} x1d``
and is a ``2p`` system with shaped stiffness ``Q1_tilde`` and injected
damping ``Rd_tilde``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .discretize import DiscretePlant, discrete_hamiltonian
from .errors import DimensionError, SingularityError
from .shaping import Controller


def _check_pair(plant: DiscretePlant, ctrl: Controller):
    if ctrl.patch.p != plant.p:
        raise DimensionError(
            f"controller patch map covers p = {ctrl.patch.p} elements, plant has {plant.p}")


def _ji_inv(plant: DiscretePlant, rhs, trans=0):
    d = np.abs(np.diag(plant.Ji))
    if d.min() == 0 or d.min() <= 1e-12 * np.abs(plant.Ji).max():
        raise SingularityError("Ji is singular")
    return sla.solve_triangular(plant.Ji, rhs, trans=trans, lower=True)


@dataclass(frozen=True, eq=False)
class ClosedLoop:
    """Dynamic closed loop ``x' = (Jcl - Rcl) Qcl x`` on ``[x1d, x2d, xc]``."""

    Jcl: np.ndarray
    Rcl: np.ndarray
    Qcl: np.ndarray
    p: int
    m: int
    casimir_map: np.ndarray

    @property
    def A_cl(self) -> np.ndarray:
        return (self.Jcl - self.Rcl) @ self.Qcl

    # generic linear PHS view used by the integrator and spectrum
    J = property(lambda self: self.Jcl)
    R = property(lambda self: self.Rcl)
    Q = property(lambda self: self.Qcl)
    A = property(lambda self: self.A_cl)

    def casimir(self, x):
        """Casimir value ``Bc M^T B0d^T Ji^{-1} x1d - xc`` of a full state."""
        return self.casimir_map @ np.asarray(x, dtype=float)

    def to_dict(self) -> dict:
        return {"p": self.p, "m": self.m, "Jcl": self.Jcl.tolist(),
                "Rcl": self.Rcl.tolist(), "Qcl": self.Qcl.tolist()}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def assemble_dynamic(plant: DiscretePlant, ctrl: Controller) -> ClosedLoop:
    _check_pair(plant, ctrl)
    p, m = plant.p, ctrl.m
    M, B0d = ctrl.patch.M, plant.B0d
    coupling = B0d @ M @ ctrl.Bc.T            # p x m
    n = 2 * p + m
    Jcl = np.zeros((n, n))
    Jcl[:p, p:2 * p] = plant.Ji
    Jcl[p:2 * p, :p] = -plant.Ji.T
    Jcl[p:2 * p, 2 * p:] = -coupling
    Jcl[2 * p:, p:2 * p] = coupling.T
    Rcl = np.zeros((n, n))
    Rcl[p:2 * p, p:2 * p] = plant.Rd + B0d @ M @ ctrl.Dc @ M.T @ B0d.T
    Rcl = 0.5 * (Rcl + Rcl.T)
    Qcl = sla.block_diag(plant.Q1, plant.Q2, ctrl.Qc)
    # Casimir row block [Bc M^T B0d^T Ji^-1, 0, -I]
    K = np.zeros((m, n))
    K[:, :p] = _ji_inv(plant, coupling, trans=1).T
    K[:, 2 * p:] = -np.eye(m)
    return ClosedLoop(Jcl=Jcl, Rcl=Rcl, Qcl=Qcl, p=p, m=m, casimir_map=K)


@dataclass(frozen=True, eq=False)
class ReducedClosedLoop:
    """Closed loop restricted to the zero Casimir leaf."""

    Q1_tilde: np.ndarray
    Rd_tilde: np.ndarray
    Ji: np.ndarray
    Q2: np.ndarray

    @property
    def p(self) -> int:
        return self.Ji.shape[0]

    @property
    def J(self) -> np.ndarray:
        Z = np.zeros_like(self.Ji)
        return np.block([[Z, self.Ji], [-self.Ji.T, Z]])

    @property
    def R(self) -> np.ndarray:
        Z = np.zeros_like(self.Ji)
        return np.block([[Z, Z], [Z, self.Rd_tilde]])

    @property
    def Q(self) -> np.ndarray:
        Z = np.zeros_like(self.Ji)
        return np.block([[self.Q1_tilde, Z], [Z, self.Q2]])

    @property
    def A(self) -> np.ndarray:
        return (self.J - self.R) @ self.Q

    def hamiltonian(self, x1d, x2d) -> float:
        x1d = np.asarray(x1d, dtype=float)
        x2d = np.asarray(x2d, dtype=float)
        return 0.5 * float(x1d @ self.Q1_tilde @ x1d + x2d @ self.Q2 @ x2d)


def assemble_reduced(plant: DiscretePlant, ctrl: Controller) -> ReducedClosedLoop:
    _check_pair(plant, ctrl)
    M, B0d = ctrl.patch.M, plant.B0d
    G = _ji_inv(plant, B0d @ M @ ctrl.Bc.T, trans=1).T    # Bc M^T B0d^T Ji^-1, m x p
    Q1t = plant.Q1 + G.T @ ctrl.Qc @ G
    Rdt = plant.Rd + B0d @ M @ ctrl.Dc @ M.T @ B0d.T
    return ReducedClosedLoop(Q1_tilde=0.5 * (Q1t + Q1t.T), Rd_tilde=0.5 * (Rdt + Rdt.T),
                             Ji=plant.Ji.copy(), Q2=plant.Q2.copy())


def state_feedback(plant: DiscretePlant, ctrl: Controller, x1d, x2d):
    """Static feedback equivalent to the controller on the zero Casimir leaf.

    Returns the distributed input ``u_d = -M yc`` with
    ``yc = Bc^T Qc Bc M^T B0d^T Ji^{-1} x1d + Dc M^T B0d^T Q2 x2d``.
    """
    _check_pair(plant, ctrl)
    x1d = np.asarray(x1d, dtype=float)
    x2d = np.asarray(x2d, dtype=float)
    if x1d.shape != (plant.p,) or x2d.shape != (plant.p,):
        raise DimensionError(f"state vectors must have length {plant.p}")
    M, B0d = ctrl.patch.M, plant.B0d
    z = _ji_inv(plant, x1d)
    yc = ctrl.X @ (M.T @ (B0d.T @ z)) + ctrl.Dc @ (M.T @ (B0d.T @ (plant.Q2 @ x2d)))
    return -M @ yc


def closed_loop_hamiltonian(plant: DiscretePlant, ctrl: Controller, x1d, x2d, xc) -> float:
    xc = np.asarray(xc, dtype=float)
    if xc.shape != (ctrl.m,):
        raise DimensionError(f"xc must have length {ctrl.m}")
    return discrete_hamiltonian(plant, x1d, x2d) + 0.5 * float(xc @ ctrl.Qc @ xc)
