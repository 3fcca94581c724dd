"""Grid discretization of the phase-space generator and its probability current.

The generator of the noise-induced model acts on quasiprobabilities through
drift, diffusion, and third-derivative terms.  Writing every term in flux
form defines a current via the continuity equation; splitting off the
rotational part (omega0 y, -omega0 x) W isolates the irreversible remainder,
which vanishes on the steady state at the discretization order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .analytic import mean_n_ss, wigner_ss
from .fock import ModelKind, ModelParams

# one-sided stencils are never used: statistics exclude this many boundary cells
EDGE_CELLS = 3


class WignerGridError(ValueError):
    pass


class BoundaryContaminationError(WignerGridError):
    """Field not negligible at the grid edge; enlarge the extent."""


@dataclass(frozen=True)
class WignerField:
    """Real samples of a quasiprobability on a uniform square grid."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        hx = np.diff(self.x)
        hy = np.diff(self.y)
        if self.x.size != self.y.size or self.w.shape != (self.x.size, self.y.size):
            raise WignerGridError("grid must be square with matching samples")
        if not (np.allclose(hx, hx[0]) and np.allclose(hy, hy[0]) and np.isclose(hx[0], hy[0])):
            raise WignerGridError("grid must be uniform with equal spacings")

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def mass(self) -> float:
        return float(self.w.sum() * self.h ** 2)


@dataclass(frozen=True)
class FluxDecomposition:
    j_rev_x: np.ndarray
    j_rev_y: np.ndarray
    j_irr_x: np.ndarray
    j_irr_y: np.ndarray


def default_extent(k_ratio: float, wp_plus: float) -> float:
    """Grid half-width covering the Gaussian tail support with margin."""
    return 2.0 * math.sqrt(2.0 * mean_n_ss(k_ratio, wp_plus) + 3.0) + 2.0


def make_grid(extent: float, h: float) -> np.ndarray:
    n = int(round(2.0 * extent / h)) + 1
    return np.linspace(-extent, extent, n)


def sample_steady_field(k_ratio: float, wp_plus: float, extent: float | None = None,
                        h: float = 0.05) -> WignerField:
    if extent is None:
        extent = default_extent(k_ratio, wp_plus)
    grid = make_grid(extent, h)
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    return WignerField(x=grid, y=grid, w=wigner_ss(X, Y, k_ratio, wp_plus))


def interior(values: np.ndarray, cells: int = EDGE_CELLS) -> np.ndarray:
    return values[cells:-cells, cells:-cells]


# ---------------------------------------------------------------------------
# stencils (second-order central; third derivatives use the fourth-order form)
# ---------------------------------------------------------------------------

def _dx(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    out = np.zeros_like(f)
    src = np.moveaxis(f, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[1:-1] = (src[2:] - src[:-2]) / (2.0 * h)
    return out


def _dxx(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    out = np.zeros_like(f)
    src = np.moveaxis(f, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[1:-1] = (src[2:] - 2.0 * src[1:-1] + src[:-2]) / h ** 2
    return out


def _dx4(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    # fourth-order first derivative; used where the truncation constant is largest
    out = np.zeros_like(f)
    src = np.moveaxis(f, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[2:-2] = (src[:-4] - 8.0 * src[1:-3] + 8.0 * src[3:-1] - src[4:]) / (12.0 * h)
    return out


def _dxxx(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    out = np.zeros_like(f)
    src = np.moveaxis(f, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[3:-3] = (
        src[:-6] - 8.0 * src[1:-5] + 13.0 * src[2:-4]
        - 13.0 * src[4:-2] + 8.0 * src[5:-1] - src[6:]
    ) / (8.0 * h ** 3)
    return out


def _zero_edges(f: np.ndarray, cells: int) -> np.ndarray:
    f[:cells, :] = 0.0
    f[-cells:, :] = 0.0
    f[:, :cells] = 0.0
    f[:, -cells:] = 0.0
    return f


def _coefficients(field: WignerField, params: ModelParams):
    if params.kind is not ModelKind.NOISE_INDUCED:
        raise WignerGridError("the phase-space generator is built for the noise-induced model")
    kd, ku = params.kappa_down, params.kappa_up2
    X, Y = field.mesh()
    s = X ** 2 + Y ** 2
    drift_x = -params.omega0 * Y - (ku + kd) * X + 0.25 * (kd - ku) * s * X
    drift_y = params.omega0 * X - (ku + kd) * Y + 0.25 * (kd - ku) * s * Y
    diff = 0.5 * (kd + ku) * s - (kd - ku)
    third_x = 0.25 * (kd - ku) * X
    third_y = 0.25 * (kd - ku) * Y
    return drift_x, drift_y, diff, third_x, third_y


def _check_boundary(field: WignerField, boundary_tol: float) -> None:
    edge = np.concatenate([field.w[0, :], field.w[-1, :], field.w[:, 0], field.w[:, -1]])
    peak = np.abs(field.w).max()
    worst = np.abs(edge).max()
    if worst > boundary_tol * peak:
        raise BoundaryContaminationError(
            f"boundary magnitude {worst:.3e} exceeds {boundary_tol:.0e} of the peak {peak:.3e}; "
            "enlarge the grid extent"
        )


def wigner_generator_apply(field: WignerField, params: ModelParams,
                           boundary_tol: float = 1e-8) -> np.ndarray:
    """Apply the discretized phase-space generator to the sampled field.

    Every term is a derivative of coefficient * w: first derivatives of the
    drifts, second derivatives of the shared diffusion coefficient, and four
    third-derivative terms.  Pure third derivatives use 4th-order stencils;
    the outer EDGE_CELLS ring is zeroed.
    """
    _check_boundary(field, boundary_tol)
    drift_x, drift_y, diff, third_x, third_y = _coefficients(field, params)
    w, h = field.w, field.h
    res = (
        _dx(drift_x * w, h, 0)
        + _dx(drift_y * w, h, 1)
        + _dxx(diff * w, h, 0)
        + _dxx(diff * w, h, 1)
        + _dx(_dxx(third_x * w, h, 1), h, 0)
        + _dxxx(third_x * w, h, 0)
        + _dx(_dxx(third_y * w, h, 0), h, 1)
        + _dxxx(third_y * w, h, 1)
    )
    return _zero_edges(res, EDGE_CELLS)


def wigner_current(field: WignerField, params: ModelParams,
                   boundary_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Current (jx, jy) whose negative divergence reproduces the generator.

    Each generator term d/dx[F] contributes -F to jx; the mixed third
    derivatives are grouped as d/dx of the cross second derivative, matching
    the decomposition in which the steady irreversible flux vanishes.  The
    diffusion-flux gradient carries the largest truncation constant and gets
    the 4th-order stencil; the remaining 2nd-order terms set the observed
    refinement order.
    """
    _check_boundary(field, boundary_tol)
    drift_x, drift_y, diff, third_x, third_y = _coefficients(field, params)
    w, h = field.w, field.h
    jx = -(drift_x * w + _dx4(diff * w, h, 0) + _dxx(third_x * w, h, 0) + _dxx(third_x * w, h, 1))
    jy = -(drift_y * w + _dx4(diff * w, h, 1) + _dxx(third_y * w, h, 1) + _dxx(third_y * w, h, 0))
    return _zero_edges(jx, EDGE_CELLS), _zero_edges(jy, EDGE_CELLS)


def divergence(jx: np.ndarray, jy: np.ndarray, h: float) -> np.ndarray:
    return _dx(jx, h, 0) + _dx(jy, h, 1)


def flux_decompose(field: WignerField, jx: np.ndarray, jy: np.ndarray,
                   params: ModelParams) -> FluxDecomposition:
    """Split the current into the rotational part and the irreversible remainder."""
    X, Y = field.mesh()
    rev_x = _zero_edges(params.omega0 * Y * field.w, EDGE_CELLS)
    rev_y = _zero_edges(-params.omega0 * X * field.w, EDGE_CELLS)
    return FluxDecomposition(
        j_rev_x=rev_x,
        j_rev_y=rev_y,
        j_irr_x=jx - rev_x,
        j_irr_y=jy - rev_y,
    )


def max_flux_norm(jx: np.ndarray, jy: np.ndarray, cells: int = EDGE_CELLS) -> float:
    return float(np.hypot(interior(jx, cells), interior(jy, cells)).max())


def field_to_csv(path, field: WignerField, jx: np.ndarray, jy: np.ndarray,
                 decomp: FluxDecomposition, header_lines: list[str] | None = None) -> None:
    """Dump (x, y, w, jx, jy, j_irr_x, j_irr_y) rows for external plotting."""
    with open(path, "w", newline="") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "w", "jx", "jy", "j_irr_x", "j_irr_y"])
        for i, xv in enumerate(field.x):
            for j, yv in enumerate(field.y):
                writer.writerow(
                    [
                        f"{v:.17g}"
                        for v in (
                            xv, yv, field.w[i, j], jx[i, j], jy[i, j],
                            decomp.j_irr_x[i, j], decomp.j_irr_y[i, j],
                        )
                    ]
                )
