"""Controller synthesis by energy shaping and damping injection.

The controller is a finite dimensional port-Hamiltonian system with
``Jc = 0`` and ``Rc = 0``,

    xc' = Bc uc,    yc = Bc^T Qc xc + Dc uc,

interconnected with the discretized plant through ``u_d = -M yc`` and
``uc = M^T y_d`` where ``M = I_m (x) 1_k`` spreads each of the ``m``
inputs over a patch of ``k`` elements. On the invariant leaf
``Bc M^T B0d^T Ji^{-1} x1d = xc`` the closed loop stiffness becomes
``Q1 + A X A^T`` with ``X = Bc^T Qc Bc`` and ``A = Ji^{-T} B0d M``, so
shaping amounts to fitting ``A X A^T`` to a target increment ``Qm``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .discretize import DiscretePlant, build_Ji
from .errors import (ConfigurationError, DimensionError, ParameterError, ParseError,
                     SingularityError, WrongSolverError)


def _sym(X):
    return 0.5 * (X + X.T)


def _check_psd(X, name, rtol=1e-10, exc=ParameterError):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError(f"{name} must be square")
    scale = max(np.linalg.norm(X), 1.0)
    if np.abs(X - X.T).max(initial=0.0) > 1e-10 * scale:
        raise exc(f"{name} must be symmetric")
    if X.size and np.linalg.eigvalsh(_sym(X)).min() < -rtol * scale:
        raise exc(f"{name} must be positive semidefinite")
    return X


@dataclass(frozen=True, eq=False)
class PatchMap:
    p: int
    m: int
    k: int
    M: np.ndarray

    @property
    def fully_actuated(self) -> bool:
        return self.m == self.p


def build_patch_map(p: int, m: int) -> PatchMap:
    p, m = int(p), int(m)
    if p < 1 or m < 1:
        raise ConfigurationError("p and m must be positive")
    if p % m:
        raise ConfigurationError(f"m must divide p (p = {p}, m = {m})")
    k = p // m
    M = np.kron(np.eye(m), np.ones((k, 1)))
    M.setflags(write=False)
    return PatchMap(p=p, m=m, k=k, M=M)


@dataclass(frozen=True, eq=False)
class ShapingProblem:
    """Least-squares target: find ``X >= 0`` minimizing ``||A X A^T - Qm||_F``."""

    A: np.ndarray
    Qm: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        Qm = _check_psd(self.Qm, "Qm", rtol=1e-12)
        if Qm.shape != (A.shape[0], A.shape[0]):
            raise DimensionError(f"Qm must be {A.shape[0]}x{A.shape[0]}, got {Qm.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Qm", Qm)

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    @classmethod
    def from_plant(cls, plant: DiscretePlant, patch: PatchMap, beta=None, Qm=None):
        """Build the problem for ``plant`` and ``patch``.

        Give either the scalar shaping gain ``beta`` (``Qm = beta / L_ab * I``,
        i.e. a uniform stiffness increase of ``beta``) or a full ``Qm``.
        """
        if patch.p != plant.p:
            raise DimensionError(f"patch map is for p = {patch.p}, plant has p = {plant.p}")
        if (beta is None) == (Qm is None):
            raise ParameterError("give exactly one of beta or Qm")
        if Qm is None:
            if beta < 0:
                raise ParameterError("beta must be nonnegative")
            Qm = np.eye(plant.p) * beta / plant.L_ab
        A = sla.solve_triangular(plant.Ji, plant.B0d @ patch.M, trans="T", lower=True)
        return cls(A=A, Qm=Qm)


def residual_f(X, problem: ShapingProblem) -> float:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape != (problem.m, problem.m):
        raise DimensionError(f"X must be {problem.m}x{problem.m}, got {X.shape}")
    A = problem.A
    return float(np.linalg.norm(A @ X @ A.T - problem.Qm, "fro"))


@dataclass(frozen=True, eq=False)
class FullyActuatedDesign:
    Bc: np.ndarray
    Qc: np.ndarray
    Xhat: np.ndarray
    residual: float


def solve_fully_actuated(problem: ShapingProblem, Ji) -> FullyActuatedDesign:
    """Exact solution for one input per element: ``Bc = Ji``, ``Qc = Qm``."""
    Ji = np.asarray(Ji, dtype=float)
    if problem.m != problem.p:
        raise WrongSolverError(f"fully actuated solver needs m = p, got m = {problem.m}, p = {problem.p}")
    if Ji.shape != (problem.p, problem.p):
        raise DimensionError("Ji does not match the problem size")
    Qm = problem.Qm
    Xhat = _sym(Ji.T @ Qm @ Ji)
    return FullyActuatedDesign(Bc=Ji.copy(), Qc=Qm.copy(), Xhat=Xhat,
                               residual=residual_f(Xhat, problem))


@dataclass(frozen=True, eq=False)
class SVDSolution:
    Xhat: np.ndarray
    residual: float
    U1: np.ndarray
    U2: np.ndarray
    Sigma0: np.ndarray
    V: np.ndarray

    def split_residual(self, Qm):
        """Return ``(T2, T3)``; the optimal ``f**2`` is ``2|T2|^2 + |T3|^2``."""
        return self.U1.T @ Qm @ self.U2, self.U2.T @ Qm @ self.U2


def solve_under_actuated(problem: ShapingProblem, rcond: float = 1e-12) -> SVDSolution:
    """Optimal ``X`` when ``A`` has full column rank.

    With ``A = [U1 U2] [Sigma0; 0] V^T`` the minimizer is
    ``V Sigma0^-1 U1^T Qm U1 Sigma0^-1 V^T``. Rank deficiency is an error
    rather than a silent pseudo-inverse.
    """
    A, Qm = problem.A, problem.Qm
    U, s, Vt = np.linalg.svd(A, full_matrices=True)
    m = problem.m
    if s.size < m or s.min() <= rcond * s.max():
        raise SingularityError(f"A is rank deficient, singular values {s.tolist()}")
    U1, U2 = U[:, :m], U[:, m:]
    V = Vt.T
    W = (V / s) @ U1.T          # V Sigma0^-1 U1^T
    Xhat = _sym(W @ Qm @ W.T)
    return SVDSolution(Xhat=Xhat, residual=residual_f(Xhat, problem),
                       U1=U1, U2=U2, Sigma0=np.diag(s), V=V)


def choose_Bc_Qc_under(Xhat, Jm):
    """Split ``Xhat`` as ``Bc^T Qc Bc`` with ``Bc = Jm``."""
    Xhat = np.atleast_2d(np.asarray(Xhat, dtype=float))
    Jm = np.atleast_2d(np.asarray(Jm, dtype=float))
    if Jm.shape != Xhat.shape:
        raise DimensionError("Jm and Xhat must have the same shape")
    s = np.linalg.svd(Jm, compute_uv=False)
    if s.min() <= 1e-12 * s.max():
        raise SingularityError("Jm is singular")
    lu = sla.lu_factor(Jm)
    Y = sla.lu_solve(lu, Xhat, trans=1)          # Jm^-T Xhat
    Qc = sla.lu_solve(lu, Y.T, trans=1).T        # (Jm^-T Xhat) Jm^-1
    return Jm.copy(), _sym(Qc)


def fit_damping(alpha: float, patch: PatchMap, L_ab: float) -> np.ndarray:
    """Diagonal ``Dc`` minimizing ``||M Dc M^T - alpha L_ab I||_F``.

    Each diagonal entry is the projection of the target onto ``M_i M_i^T``,
    which for uniform patches is ``alpha L_ab / k``.
    """
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    M = patch.M
    target = np.full(patch.p, alpha * L_ab)
    # <M_i M_i^T, diag(t)> / ||M_i M_i^T||^2
    num = (M * M).T @ target
    den = (M.T @ M).diagonal() ** 2
    return np.diag(num / den)


def casimir_value(Bc, patch: PatchMap, B0d, Ji, x1d, xc):
    """``Bc M^T B0d^T Ji^{-1} x1d - xc``, constant along closed-loop trajectories."""
    xc = np.asarray(xc, dtype=float)
    return casimir_init(Bc, patch, B0d, Ji, x1d) - xc


def casimir_init(Bc, patch: PatchMap, B0d, Ji, x1d0):
    """Controller state placing the closed loop on the zero Casimir leaf."""
    Ji = np.asarray(Ji, dtype=float)
    x1d0 = np.asarray(x1d0, dtype=float)
    if x1d0.shape != (patch.p,) or Ji.shape != (patch.p, patch.p):
        raise DimensionError("x1d and Ji must match the patch map size")
    diag = np.diag(Ji)
    if np.allclose(Ji, np.tril(Ji)) and np.all(np.abs(diag) > 1e-300):
        z = sla.solve_triangular(Ji, x1d0, lower=True)
    else:
        try:
            z = np.linalg.solve(Ji, x1d0)
        except np.linalg.LinAlgError:
            raise SingularityError("Ji is singular") from None
    return np.asarray(Bc) @ (patch.M.T @ (np.asarray(B0d).T @ z))


@dataclass(frozen=True, eq=False)
class Controller:
    Bc: np.ndarray
    Qc: np.ndarray
    Dc: np.ndarray
    patch: PatchMap
    residual: float = 0.0

    def __post_init__(self):
        m = self.patch.m
        for name in ("Bc", "Qc", "Dc"):
            a = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if a.shape != (m, m):
                raise DimensionError(f"{name} must be {m}x{m}, got {a.shape}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        _check_psd(self.Qc, "Qc")
        _check_psd(self.Dc, "Dc")
        s = np.linalg.svd(self.Bc, compute_uv=False)
        if s.min() <= 1e-12 * s.max():
            raise SingularityError("Bc must be invertible")
        if np.linalg.eigvalsh(self.Dc).min() <= 0:
            warnings.warn("Dc is only positive semidefinite; no damping on some inputs",
                          RuntimeWarning, stacklevel=3)

    @property
    def m(self) -> int:
        return self.patch.m

    @property
    def k(self) -> int:
        return self.patch.k

    @property
    def X(self) -> np.ndarray:
        return self.Bc.T @ self.Qc @ self.Bc

    def to_dict(self) -> dict:
        return {"Bc": self.Bc.tolist(), "Qc": self.Qc.tolist(), "Dc": self.Dc.tolist(),
                "m": self.m, "k": self.k, "residual": float(self.residual)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "Controller":
        try:
            patch = build_patch_map(int(doc["m"]) * int(doc["k"]), int(doc["m"]))
            return cls(Bc=doc["Bc"], Qc=doc["Qc"], Dc=doc["Dc"], patch=patch,
                       residual=float(doc["residual"]))
        except KeyError as exc:
            raise ParseError(f"controller document missing key {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Controller":
        return cls.from_dict(json.loads(text))


def design_controller(plant: DiscretePlant, m: int, alpha: float, beta=None, Qm=None) -> Controller:
    """Full design: shaping (exact or SVD-optimal) plus fitted damping.

    ``m == plant.p`` selects the exact fully actuated solution; otherwise
    the SVD optimum is split with ``Bc = Jm``, the size-``m`` derivative
    matrix built with the plant's ``gamma``. ``alpha = 0`` gives no
    damping injection at all.
    """
    patch = build_patch_map(plant.p, m)
    if beta is None and Qm is None:
        beta = 0.0
    problem = ShapingProblem.from_plant(plant, patch, beta=beta, Qm=Qm)
    if patch.fully_actuated:
        sol = solve_fully_actuated(problem, plant.Ji)
        Bc, Qc, res = sol.Bc, sol.Qc, sol.residual
    else:
        sol = solve_under_actuated(problem)
        Bc, Qc = choose_Bc_Qc_under(sol.Xhat, build_Ji(m, plant.gamma))
        res = sol.residual
    if alpha < 0:
        raise ParameterError("alpha must be nonnegative")
    Dc = fit_damping(alpha, patch, plant.L_ab) if alpha > 0 else np.zeros((m, m))
    return Controller(Bc=Bc, Qc=Qc, Dc=Dc, patch=patch, residual=res)
