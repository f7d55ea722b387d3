"""Mixed finite element discretization of the clamped-free plant.

The result is again a port-Hamiltonian system on ``p`` elements,

    d/dt [x1d; x2d] = (J_n - R_n) [Q1 x1d; Q2 x2d] + [0; B0d] u_d,

with ``J_n = [[0, Ji], [-Ji^T, 0]]`` and ``R_n = diag(0, Rd)``. Boundary
actuation is zero by assumption, so no boundary input matrices are built.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, ParameterError, ParseError, UnsupportedModelError
from .model import ContinuousPlant


def build_Ji(p: int, gamma: float = 0.5) -> np.ndarray:
    """Discretized derivative for the clamped-free configuration.

    Lower triangular with ``1/gamma`` on the diagonal and, at distance
    ``d = i - j >= 1`` below it, ``(-1)**d * (1-gamma)**(d-1) / gamma**(d+1)``.
    """
    p = int(p)
    if p < 1:
        raise ParameterError("p must be at least 1")
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma must lie in (0, 1), got {gamma}")
    gp = 1.0 - gamma
    d = np.arange(1, p)
    band = (-1.0) ** d * gp ** (d - 1) / gamma ** (d + 1)
    Ji = np.eye(p) / gamma
    for k, v in zip(d, band):
        Ji += v * np.eye(p, k=-k)
    return Ji


@dataclass(frozen=True, eq=False)
class DiscretePlant:
    p: int
    L_ab: float
    gamma: float
    Ji: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    Rd: np.ndarray
    B0d: np.ndarray

    def __post_init__(self):
        p = self.p
        for name in ("Ji", "Q1", "Q2", "Rd", "B0d"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (p, p):
                raise DimensionError(f"{name} must be {p}x{p}, got {a.shape}")
            a = a.copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def length(self) -> float:
        return self.p * self.L_ab

    @property
    def Jn(self) -> np.ndarray:
        Z = np.zeros((self.p, self.p))
        return np.block([[Z, self.Ji], [-self.Ji.T, Z]])

    @property
    def Rn(self) -> np.ndarray:
        Z = np.zeros((self.p, self.p))
        return np.block([[Z, Z], [Z, self.Rd]])

    @property
    def Q(self) -> np.ndarray:
        Z = np.zeros((self.p, self.p))
        return np.block([[self.Q1, Z], [Z, self.Q2]])

    @property
    def A(self) -> np.ndarray:
        """Open-loop generator ``(J_n - R_n) Q`` with ``u_d = 0``."""
        return (self.Jn - self.Rn) @ self.Q

    J = property(lambda self: self.Jn)
    R = property(lambda self: self.Rn)

    def lossless(self) -> "DiscretePlant":
        """Same plant with the internal dissipation removed."""
        return replace(self, Rd=np.zeros((self.p, self.p)))

    def to_dict(self) -> dict:
        return {"p": self.p, "L_ab": self.L_ab, "gamma": self.gamma,
                "Ji": self.Ji.tolist(), "Q1": self.Q1.tolist(), "Q2": self.Q2.tolist(),
                "Rd": self.Rd.tolist(), "B0d": self.B0d.tolist()}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "DiscretePlant":
        try:
            return cls(p=int(doc["p"]), L_ab=float(doc["L_ab"]), gamma=float(doc["gamma"]),
                       Ji=doc["Ji"], Q1=doc["Q1"], Q2=doc["Q2"], Rd=doc["Rd"], B0d=doc["B0d"])
        except KeyError as exc:
            raise ParseError(f"discrete plant document missing key {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "DiscretePlant":
        return cls.from_dict(json.loads(text))


def build_energy_and_dissipation(plant: ContinuousPlant, p: int, gamma: float = 0.5) -> DiscretePlant:
    """Discretize an ``n = 1`` plant into ``p`` elements of equal length.

    Coefficient profiles are sampled at element midpoints, giving
    ``Q1 = diag(L1 / L_ab)``, ``Q2 = diag(L2 / L_ab)`` and
    ``Rd = diag(R * L_ab)``. The distributed input acts element-wise
    (``B0d = I``).
    """
    if plant.n != 1:
        raise UnsupportedModelError(f"only n = 1 plants can be discretized, got n = {plant.n}")
    p = int(p)
    if p < 1:
        raise ParameterError("p must be at least 1")
    Ji = build_Ji(p, gamma)
    L_ab = plant.length / p
    mid = (np.arange(p) + 0.5) * L_ab
    l1 = np.asarray(plant.L1_profile(mid), dtype=float)
    l2 = np.asarray(plant.L2_profile(mid), dtype=float)
    if np.any(l1 <= 0) or np.any(l2 <= 0):
        raise ParameterError("energy coefficients must be positive at every element")
    r = float(plant.R[0, 0])
    return DiscretePlant(p=p, L_ab=L_ab, gamma=gamma, Ji=Ji,
                         Q1=np.diag(l1 / L_ab), Q2=np.diag(l2 / L_ab),
                         Rd=np.eye(p) * r * L_ab, B0d=np.eye(p))


discretize = build_energy_and_dissipation


def discrete_hamiltonian(plant: DiscretePlant, x1d, x2d) -> float:
    x1d = np.asarray(x1d, dtype=float)
    x2d = np.asarray(x2d, dtype=float)
    if x1d.shape != (plant.p,) or x2d.shape != (plant.p,):
        raise DimensionError(f"state vectors must have length {plant.p}")
    return 0.5 * float(x1d @ plant.Q1 @ x1d + x2d @ plant.Q2 @ x2d)
