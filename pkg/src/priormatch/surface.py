"""Cost-surface grids around a reference classifier.

``primal_surface`` evaluates the matching cost J on offsets of the two
weights. ``primal_dual_surface`` evaluates the saddle function along one
random primal direction and one random dual direction through
``(theta0, V0)``; cells whose dual point leaves ``V < 0`` hold ``inf``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from priormatch.errors import DomainError, InvalidInputError
from priormatch.model import ModelParams
from priormatch.objective import cost, lagrangian
from priormatch.prior import validate_prior


@dataclass(frozen=True)
class GridSpec:
    lo1: float = -5.0
    hi1: float = 5.0
    n1: int = 81
    lo2: float = -5.0
    hi2: float = 5.0
    n2: int = 81

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        if self.n1 < 1 or self.n2 < 1:
            raise InvalidInputError("grid needs at least one point per axis")
        return np.linspace(self.lo1, self.hi1, self.n1), np.linspace(self.lo2, self.hi2, self.n2)


@dataclass
class SurfaceGrid:
    axis1: np.ndarray
    axis2: np.ndarray
    z: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """Comment line with the anchor, then ``lambda1,lambda2,z`` rows in
        row-major order."""
        meta = " ".join(f"{k}={_fmt_meta(v)}" for k, v in self.metadata.items())
        with open(path, "w") as fh:
            fh.write(f"# {meta}\n")
            fh.write("lambda1,lambda2,z\n")
            for i, a in enumerate(self.axis1):
                for j, b in enumerate(self.axis2):
                    fh.write(f"{float(a)!r},{float(b)!r},{_fmt_z(self.z[i, j])}\n")


def _fmt_z(v) -> str:
    return "inf" if np.isinf(v) else repr(float(v))


def _fmt_meta(v) -> str:
    if isinstance(v, np.ndarray):
        v = v.tolist()
    return str(v).replace(" ", "")


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm == 0:
        raise InvalidInputError("direction vector is zero")
    return v / norm


def primal_surface(theta0: ModelParams, inputs, prior, grid: GridSpec | None = None) -> SurfaceGrid:
    """``z[i, j] = J(w_a0 + axis1[i], w_b0 + axis2[j])``."""
    prior = validate_prior(prior)
    a1, a2 = (grid or GridSpec()).axes()
    z = np.empty((a1.size, a2.size))
    for i, da in enumerate(a1):
        for j, db in enumerate(a2):
            z[i, j] = cost(ModelParams(theta0.w_a + da, theta0.w_b + db, theta0.gamma), inputs, prior)
    meta = {"mode": "primal", "anchor": theta0.theta}
    return SurfaceGrid(a1, a2, z, meta)


def primal_dual_surface(
    theta0: ModelParams,
    v0,
    inputs,
    prior,
    grid: GridSpec | None = None,
    seed: int = 0,
) -> SurfaceGrid:
    """``z[i, j] = L(theta0 + axis1[i] * d_theta, V0 + axis2[j] * d_V)``.

    Both directions are standard-normal draws from ``seed``, scaled to unit
    length.
    """
    prior = validate_prior(prior)
    V0 = np.asarray(v0, dtype=float)
    if V0.shape != prior.shape:
        raise InvalidInputError(f"V0 shape {V0.shape} does not match prior shape {prior.shape}")
    if not np.all(V0 < 0):
        raise DomainError("V0 must be strictly negative")
    rng = np.random.default_rng(seed)
    d_theta = _unit(rng.standard_normal(2))
    d_V = _unit(rng.standard_normal(prior.shape))
    a1, a2 = (grid or GridSpec()).axes()
    z = np.empty((a1.size, a2.size))
    for i, lp in enumerate(a1):
        params = theta0.with_theta(theta0.theta + lp * d_theta)
        for j, ld in enumerate(a2):
            V = V0 + ld * d_V
            z[i, j] = lagrangian(params, V, inputs, prior) if np.all(V < 0) else np.inf
    meta = {
        "mode": "primal-dual",
        "anchor": theta0.theta,
        "V0": V0,
        "d_theta": d_theta,
        "d_V": d_V,
        "seed": seed,
    }
    return SurfaceGrid(a1, a2, z, meta)
