"""Implicit midpoint time integration of linear port-Hamiltonian systems.

For ``x' = (J - R) Q x`` the midpoint rule satisfies the discrete power
balance

    H(x_{n+1}) - H(x_n) = -dt (Q x_mid)^T R (Q x_mid),  x_mid = (x_n + x_{n+1}) / 2

exactly, so lossless systems conserve ``H = x^T Q x / 2`` up to round-off.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, ParameterError, StepError


class MidpointStepper:
    """Midpoint map ``x -> (I - dt/2 A)^{-1} (I + dt/2 A) x`` with a cached LU."""

    def __init__(self, A, dt: float):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise DimensionError("system matrix must be square")
        self.dt = float(dt)
        n = A.shape[0]
        left = np.eye(n) - 0.5 * dt * A
        self._right = np.eye(n) + 0.5 * dt * A
        with warnings.catch_warnings():
            # singularity is reported below as a StepError
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(left, check_finite=False)
        d = np.abs(np.diag(lu))
        if n and (d.min() == 0 or d.min() <= 1e-14 * d.max()):
            raise StepError(f"midpoint resolvent is singular for dt = {dt}")
        self._lu = (lu, piv)

    def step(self, x):
        return sla.lu_solve(self._lu, self._right @ x, check_finite=False)


def midpoint_step(A, x_n, dt: float):
    x_n = np.asarray(x_n, dtype=float)
    return MidpointStepper(A, dt).step(x_n)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 5e-5
    t_final: float = 1e-2
    record_stride: int = 10

    def __post_init__(self):
        if not self.dt > 0 or not self.t_final > 0:
            raise ParameterError("dt and t_final must be positive")
        if self.dt > self.t_final:
            raise ParameterError("dt must not exceed t_final")
        if int(self.record_stride) < 1:
            raise ParameterError("record_stride must be at least 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


def gaussian_profile(p: int, L: float, mu: float, sigma2: float, amplitude: float = 1.0):
    """Gaussian bump sampled at the element midpoints ``(j - 1/2) L / p``."""
    if not sigma2 > 0:
        raise ParameterError("sigma2 must be positive")
    zeta = (np.arange(p) + 0.5) * L / p
    return amplitude * np.exp(-(zeta - mu) ** 2 / (2.0 * sigma2))


@dataclass(frozen=True)
class InitialCondition:
    """Strain profile at ``t = 0``; the momentum starts at rest.

    ``kind`` is ``"gaussian"``, ``"zero"`` or ``"custom"`` (then ``vector``
    holds pointwise strain samples at the element midpoints).
    """

    kind: str = "gaussian"
    mu: float = 1.5
    sigma2: float = 0.113
    amplitude: float = 1.0
    vector: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "zero", "custom"):
            raise ParameterError(f"unknown initial condition kind {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma2 > 0:
            raise ParameterError("sigma2 must be positive")
        if self.kind == "custom" and self.vector is None:
            raise ParameterError("custom initial condition needs a vector")

    def strain(self, p: int, L: float):
        if self.kind == "zero":
            return np.zeros(p)
        if self.kind == "custom":
            v = np.asarray(self.vector, dtype=float)
            if v.shape != (p,):
                raise DimensionError(f"custom initial strain must have length {p}")
            return v
        return gaussian_profile(p, L, self.mu, self.sigma2, self.amplitude)

    def x1d(self, p: int, L: float, convention: str = "integral"):
        """Energy variables of the discretized strain.

        Under the integral convention each entry is the strain integrated
        over its element, i.e. the pointwise sample times ``L / p``.
        """
        s = self.strain(p, L)
        return s * (L / p) if convention == "integral" else s


def reconstruct_deformation(x1d, L_ab: float | None = None, convention: str = "integral"):
    """Displacement at element right edges, clamped at ``zeta = 0``.

    With integral energy variables the displacement is the plain cumulative
    sum; pointwise strain samples are weighted by ``L_ab`` first.
    """
    x1d = np.asarray(x1d, dtype=float)
    if convention == "integral":
        return np.cumsum(x1d, axis=-1)
    if convention == "pointwise":
        if L_ab is None:
            raise ParameterError("pointwise convention needs L_ab")
        return L_ab * np.cumsum(x1d, axis=-1)
    raise ParameterError(f"unknown strain convention {convention!r}")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    hamiltonian: np.ndarray
    endpoint: np.ndarray
    casimir: np.ndarray | None = None
    p: int = 0
    L_ab: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def casimir_norm(self):
        if self.casimir is None:
            return np.zeros_like(self.times)
        return np.linalg.norm(self.casimir, axis=1)

    def casimir_drift(self) -> float:
        if self.casimir is None:
            return 0.0
        return float(np.abs(self.casimir - self.casimir[0]).max())

    def to_csv(self, path=None) -> str:
        """Write ``t,H,endpoint,casimir_norm`` rows with 17 significant digits."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "H", "endpoint", "casimir_norm"])
        for row in zip(self.times, self.hamiltonian, self.endpoint, self.casimir_norm):
            w.writerow([f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def write_snapshots(self, directory, indices=None):
        """Write ``state_<index>.csv`` files with ``zeta,x1,x2`` columns."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        p = self.p
        zeta = (np.arange(p) + 0.5) * self.L_ab
        if indices is None:
            indices = range(len(self.times))
        written = []
        for i in indices:
            x = self.states[i]
            lines = ["zeta,x1,x2"]
            lines += [f"{z:.17g},{a:.17g},{b:.17g}" for z, a, b in zip(zeta, x[:p], x[p:2 * p])]
            f = directory / f"state_{i}.csv"
            f.write_text("\n".join(lines) + "\n")
            written.append(f)
        return written


def simulate(system, x0, cfg: SimConfig, convention: str = "integral", L_ab: float | None = None):
    """Integrate ``system`` from ``x0`` and record traces every ``record_stride`` steps.

    ``system`` is any object exposing ``A`` and ``Q`` (and ``p``, the number
    of plant elements whose strains come first in the state). Objects with
    a ``casimir`` method also get a Casimir trace.
    """
    A = system.A
    Q = system.Q
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (A.shape[0],):
        raise DimensionError(f"x0 must have length {A.shape[0]}, got {x.shape}")
    p = int(getattr(system, "p", A.shape[0] // 2))
    L_ab = float(L_ab if L_ab is not None else getattr(system, "L_ab", 1.0))
    cas = getattr(system, "casimir", None)

    try:
        stepper = MidpointStepper(A, cfg.dt)
    except StepError as exc:
        raise StepError(f"step 0: {exc}") from None

    stride = int(cfg.record_stride)
    N = cfg.n_steps
    recs = [x.copy()]
    times = [0.0]
    for n in range(1, N + 1):
        x = stepper.step(x)
        if not np.all(np.isfinite(x)):
            raise StepError(f"non-finite state at step {n} (dt = {cfg.dt})")
        if n % stride == 0 or n == N:
            recs.append(x.copy())
            times.append(n * cfg.dt)
    states = np.array(recs)
    H = 0.5 * np.einsum("ij,jk,ik->i", states, Q, states)
    endpoint = reconstruct_deformation(states[:, :p], L_ab, convention)[:, -1]
    casimir = None if cas is None else np.array([cas(s) for s in states])
    return Trajectory(times=np.array(times), states=states, hamiltonian=H,
                      endpoint=endpoint, casimir=casimir, p=p, L_ab=L_ab)


def energy_balance_residuals(system, states, dt: float):
    """Per-step ``H(x_{n+1}) - H(x_n) + dt (Q x_mid)^T R (Q x_mid)``, relative to ``H(x_n)``."""
    Q, R = system.Q, system.R
    X = np.asarray(states, dtype=float)
    H = 0.5 * np.einsum("ij,jk,ik->i", X, Q, X)
    E = (0.5 * (X[1:] + X[:-1])) @ Q.T
    diss = dt * np.einsum("ij,jk,ik->i", E, R, E)
    res = H[1:] - H[:-1] + diss
    return res / np.maximum(H[:-1], np.finfo(float).tiny)


class SettleTime(NamedTuple):
    seconds: float
    settled: bool


def settle_time(times, trace, band_fraction: float = 0.02) -> SettleTime:
    """First recorded time after which ``|trace|`` stays inside the band.

    The band is ``band_fraction * max|trace|``. A trace still outside the
    band at its last sample is reported as not settled, at the final time.
    """
    times = np.asarray(times, dtype=float)
    a = np.abs(np.asarray(trace, dtype=float))
    if a.size == 0 or a.size != times.size:
        raise ParameterError("trace must be nonempty and match times")
    if not 0.0 < band_fraction < 1.0:
        raise ParameterError("band_fraction must lie in (0, 1)")
    peak = a.max()
    if peak == 0.0:
        return SettleTime(0.0, True)
    outside = np.nonzero(a > band_fraction * peak)[0]
    last = outside[-1]
    if last == a.size - 1:
        return SettleTime(float(times[-1]), False)
    return SettleTime(float(times[last + 1]), True)
