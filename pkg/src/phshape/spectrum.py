"""Closed-loop pole analysis."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .closed_loop import ClosedLoop, assemble_dynamic
from .discretize import DiscretePlant
from .errors import ConfigurationError, DimensionError, InputError, NumericError
from .shaping import Controller, build_patch_map


@dataclass(frozen=True, eq=False)
class PoleSet:
    """Eigenvalues in rad/s, sorted by ``|imag|`` then by real part."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    @property
    def real(self):
        return self.values.real

    @property
    def imag(self):
        return self.values.imag

    def real_poles(self, rtol: float = 1e-9):
        """Poles whose imaginary part is negligible, sorted ascending."""
        v = self.values
        scale = np.maximum(np.abs(v), 1.0)
        return np.sort(v[np.abs(v.imag) <= rtol * scale].real)

    def oscillatory(self, rtol: float = 1e-9):
        """Poles with positive imaginary part (one per conjugate pair)."""
        v = self.values
        return v[v.imag > rtol * np.maximum(np.abs(v), 1.0)]

    def nearest(self, target: complex):
        """Pole closest to ``target`` and its distance relative to ``|target|``."""
        i = int(np.argmin(np.abs(self.values - target)))
        s = self.values[i]
        return s, float(abs(s - target) / max(abs(target), np.finfo(float).tiny))

    def is_conjugate_closed(self, rtol: float = 1e-6) -> bool:
        v = self.values
        if v.size == 0:
            return True
        scale = max(np.abs(v).max(), 1.0)
        d = np.abs(v[:, None] - np.conj(v)[None, :]).min(axis=1)
        return bool(np.all(d <= rtol * scale))

    def to_csv(self, path=None) -> str:
        lines = ["re,im"] + [f"{s.real:.17g},{s.imag:.17g}" for s in self.values]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    def write(self, csv_path, meta_path=None):
        csv_path = Path(csv_path)
        self.to_csv(csv_path)
        meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
        meta_path.write_text(json.dumps(self.meta, indent=2, sort_keys=True))
        return csv_path, meta_path


def _sorted(ev):
    order = np.lexsort((ev.real, np.abs(ev.imag)))
    return ev[order]


def poles(A, meta: dict | None = None) -> PoleSet:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise DimensionError("system matrix must be square")
    try:
        ev = sla.eigvals(A, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigensolver failed: {exc}") from None
    return PoleSet(values=_sorted(ev), meta=dict(meta or {}))


def leaf_matrix(cl: ClosedLoop) -> np.ndarray:
    """Generator restricted to the zero Casimir leaf.

    The leaf ``ker K`` is invariant (``K A = 0``), so with an orthonormal
    basis ``Z`` of it the restricted dynamics are ``Z^T A Z``. This drops
    exactly the ``m`` structural zero eigenvalues carried by the conserved
    Casimir components.
    """
    Z = sla.null_space(cl.casimir_map)
    return Z.T @ cl.A_cl @ Z


def leaf_poles(cl: ClosedLoop, meta: dict | None = None) -> PoleSet:
    meta = dict(meta or {})
    meta.setdefault("restricted_to_casimir_leaf", True)
    return poles(leaf_matrix(cl), meta)


def stability_margin(poleset: PoleSet) -> float:
    """Largest real part; negative means the discretized loop is asymptotically stable."""
    if len(poleset) == 0:
        raise InputError("empty pole set")
    return float(poleset.values.real.max())


def spillover_assembly(fine_plant: DiscretePlant, ctrl: Controller) -> ClosedLoop:
    """Pair an ``m``-input controller designed on a coarse grid with a finer plant.

    The patch map is rebuilt over the fine elements; ``Bc``, ``Qc`` and
    ``Dc`` are reused unchanged.
    """
    if fine_plant.p % ctrl.m:
        raise ConfigurationError(
            f"fine plant p = {fine_plant.p} is not divisible by m = {ctrl.m}")
    patch = build_patch_map(fine_plant.p, ctrl.m)
    fine_ctrl = Controller(Bc=ctrl.Bc, Qc=ctrl.Qc, Dc=ctrl.Dc, patch=patch,
                           residual=ctrl.residual)
    return assemble_dynamic(fine_plant, fine_ctrl)
