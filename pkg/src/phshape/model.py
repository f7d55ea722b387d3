"""Continuous 1-D port-Hamiltonian plant with two conservation laws.

The plant is

    d/dt [x1; x2] = [[0, G], [-G*, -R]] [L1 x1; L2 x2] + [0; B0] u_d

with ``G = G0 + G1 d/dzeta`` on ``zeta in [0, length]``. Boundary inputs
and outputs are ``u_b = W [f; e]`` and ``y_b = W_tilde [f; e]`` where
``(f, e)`` are the boundary port variables built from the co-energy
traces at both ends.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, ModelError, ParseError

Profile = Callable[[np.ndarray], np.ndarray]

# coercivity is checked on this many points of [0, length]
_PROFILE_SAMPLES = 201


class ConstantProfile:
    """A spatially constant coefficient, callable on arrays of positions."""

    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, zeta):
        return np.full(np.shape(zeta), self.value)

    def __repr__(self):
        return f"ConstantProfile({self.value!r})"

    def __eq__(self, other):
        return isinstance(other, ConstantProfile) and other.value == self.value


def _as_profile(p) -> Profile:
    if callable(p):
        return p
    return ConstantProfile(p)


def sigma_matrix(n: int) -> np.ndarray:
    """Return ``[[0, I], [I, 0]]`` of size 4n."""
    eye = np.eye(2 * n)
    zero = np.zeros((2 * n, 2 * n))
    return np.block([[zero, eye], [eye, zero]])


@dataclass(frozen=True)
class BoundaryReport:
    rank: int
    min_eigenvalue: float
    passed: bool
    messages: tuple[str, ...] = ()


def validate_boundary_matrix(W, n: int | "ContinuousPlant") -> BoundaryReport:
    """Check the boundary matrix condition for a contraction semigroup.

    ``W`` must be ``2n x 4n``, have full row rank and satisfy
    ``W Sigma W^T >= 0``.

    Parameters
    ----------
    W
        Boundary input map.
    n
        Number of conservation-law pairs, or a plant to read it from.

    Returns
    -------
    BoundaryReport
        Rank, smallest eigenvalue of ``sym(W Sigma W^T)`` and the verdict.
    """
    if isinstance(n, ContinuousPlant):
        n = n.n
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape != (2 * n, 4 * n):
        raise DimensionError(f"W must be {2 * n}x{4 * n}, got {W.shape[0]}x{W.shape[1]}")

    rank = int(np.linalg.matrix_rank(W))
    S = W @ sigma_matrix(n) @ W.T
    S = 0.5 * (S + S.T)
    lam = float(np.linalg.eigvalsh(S).min())
    tol = 1e-12 * max(1.0, float(np.linalg.norm(S, 2)))

    messages = []
    if rank < 2 * n:
        messages.append(f"rank deficient: rank(W) = {rank} < {2 * n}")
    if lam < -tol:
        messages.append(f"W Sigma W^T not positive semidefinite: min eigenvalue {lam:.3e}")
    return BoundaryReport(rank=rank, min_eigenvalue=lam, passed=not messages,
                          messages=tuple(messages))


@dataclass(frozen=True)
class BoundaryPortMap:
    P1: np.ndarray
    R_ext: np.ndarray

    @property
    def n(self) -> int:
        return self.P1.shape[0] // 2

    def port_variables(self, trace_L, trace_0):
        """Map co-energy traces ``L x(L)`` and ``L x(0)`` to ``(f, e)``.

        Each trace is ordered ``[L1 x1, L2 x2]`` and has length ``2n``.
        """
        trace_L = np.asarray(trace_L, dtype=float).ravel()
        trace_0 = np.asarray(trace_0, dtype=float).ravel()
        m = 2 * self.n
        if trace_L.size != m or trace_0.size != m:
            raise DimensionError(f"boundary traces must have length {m}")
        fe = self.R_ext @ np.concatenate([trace_L, trace_0])
        return fe[:m], fe[m:]


@dataclass(frozen=True, eq=False)
class ContinuousPlant:
    """Physical description of the distributed plant.

    Constant coefficient profiles may be given as plain numbers.
    """

    n: int
    length: float
    G0: np.ndarray
    G1: np.ndarray
    L1_profile: Profile
    L2_profile: Profile
    R: np.ndarray
    W: np.ndarray
    W_tilde: np.ndarray
    eta: float = field(default=0.0)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ModelError("n must be a positive integer")
        if not self.length > 0:
            raise ModelError("length must be positive")
        set_ = object.__setattr__
        set_(self, "n", n)
        set_(self, "length", float(self.length))
        for name, shape in (("G0", (n, n)), ("G1", (n, n)), ("R", (n, n)),
                            ("W", (2 * n, 4 * n)), ("W_tilde", (2 * n, 4 * n))):
            a = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if a.shape != shape:
                raise DimensionError(f"{name} must be {shape[0]}x{shape[1]}, got {a.shape}")
            a.setflags(write=False)
            set_(self, name, a)
        set_(self, "L1_profile", _as_profile(self.L1_profile))
        set_(self, "L2_profile", _as_profile(self.L2_profile))
        self._check()

    def _check(self):
        s = np.linalg.svd(self.G1, compute_uv=False)
        if s.min() <= 1e-12 * s.max() or s.max() == 0:
            raise ModelError("G1 must be invertible")
        if not np.allclose(self.R, self.R.T, rtol=0, atol=1e-12 * max(1.0, np.abs(self.R).max())):
            raise ModelError("R must be symmetric")
        if np.linalg.eigvalsh(self.R).min() <= 0:
            raise ModelError("R must be positive definite")
        zeta = np.linspace(0.0, self.length, _PROFILE_SAMPLES)
        for name in ("L1_profile", "L2_profile"):
            vals = np.asarray(getattr(self, name)(zeta), dtype=float)
            if not np.all(vals > self.eta) or not np.all(np.isfinite(vals)):
                raise ModelError(f"{name} must stay above eta = {self.eta} on [0, L]")
        report = validate_boundary_matrix(self.W, self.n)
        if not report.passed:
            raise ModelError("invalid boundary matrix W: " + "; ".join(report.messages))
        if np.linalg.matrix_rank(self.W_tilde) < 2 * self.n:
            raise ModelError("W_tilde must have full rank")
        stacked = np.vstack([self.W, self.W_tilde])
        if np.linalg.matrix_rank(stacked) < 4 * self.n:
            raise ModelError("[W; W_tilde] must be invertible")

    # JSON document: {"n", "length", "G0", "G1", "L1", "L2", "R", "W", "W_tilde"}
    def to_dict(self) -> dict:
        out = {"n": self.n, "length": self.length,
               "G0": self.G0.tolist(), "G1": self.G1.tolist()}
        for key, prof in (("L1", self.L1_profile), ("L2", self.L2_profile)):
            if not isinstance(prof, ConstantProfile):
                raise ModelError(f"{key} profile is not constant and cannot be serialized")
            out[key] = prof.value
        out.update(R=self.R.tolist(), W=self.W.tolist(), W_tilde=self.W_tilde.tolist())
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "ContinuousPlant":
        missing = [k for k in ("n", "length", "G0", "G1", "L1", "L2", "R", "W", "W_tilde")
                   if k not in doc]
        if missing:
            raise ParseError(f"plant document missing keys: {', '.join(missing)}")
        return cls(n=doc["n"], length=doc["length"], G0=doc["G0"], G1=doc["G1"],
                   L1_profile=doc["L1"], L2_profile=doc["L2"], R=doc["R"],
                   W=doc["W"], W_tilde=doc["W_tilde"])

    @classmethod
    def from_json(cls, text: str) -> "ContinuousPlant":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(doc)


def build_boundary_port_map(plant: ContinuousPlant) -> BoundaryPortMap:
    """Return ``P1 = [[0, G1], [G1^T, 0]]`` and ``R_ext = [[P1, -P1], [I, I]] / sqrt(2)``."""
    n = plant.n
    G1 = plant.G1
    if abs(np.linalg.det(G1)) <= 1e-12 * np.linalg.norm(G1):
        raise ModelError("G1 is singular")
    zero = np.zeros((n, n))
    P1 = np.block([[zero, G1], [G1.T, zero]])
    eye = np.eye(2 * n)
    R_ext = np.block([[P1, -P1], [eye, eye]]) / np.sqrt(2.0)
    return BoundaryPortMap(P1=P1, R_ext=R_ext)


CLAMPED_FREE_W = np.sqrt(2.0) / 2.0 * np.array([[0.0, 1.0, 1.0, 0.0],
                                                [-1.0, 0.0, 0.0, 1.0]])


def string_plant(length=2.0, tension=1.4e6, density=1.225, damping=1e-3) -> ContinuousPlant:
    """Vibrating string, clamped at 0 and free at ``length``.

    ``x1`` is the strain and ``x2`` the linear momentum density, so that
    ``L1 = tension`` and ``L2 = 1 / density``.
    """
    if not density > 0:
        raise ModelError("density must be positive")
    W = CLAMPED_FREE_W
    return ContinuousPlant(n=1, length=length, G0=[[0.0]], G1=[[1.0]],
                           L1_profile=tension, L2_profile=1.0 / density,
                           R=[[damping]], W=W, W_tilde=W @ sigma_matrix(1))
