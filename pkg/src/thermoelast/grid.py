"""Uniform periodic grids and sampled fields.

Everything in this package lives on a uniform tensor-product grid over a
periodic box [0, L_1) x ... x [0, L_d), d in {2, 3}.  Fields are stored in
physical space as float64 arrays; spectral representations are taken on
demand with numpy's FFT.  Derivatives of band-limited fields are exact:
transform, multiply by the wavevector lattice, transform back.

The default box edge is 2*pi, which makes the wavevector lattice the integer
lattice and keeps the spectral identities used by the verification suite
exact to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "TWO_PI",
    "TorusGrid",
    "ScalarField",
    "VectorField",
    "quadrature",
    "spectral_l2_sq",
    "field_norms",
]

TWO_PI = 2.0 * math.pi

# inverse transforms must come back real up to this relative residue;
# fields whose entire magnitude sits at roundoff scale are exempted by the
# absolute floor (their "reality" is vacuous)
IMAG_RESIDUE_REL = 1e-12
IMAG_RESIDUE_ABS = 1e-13


def _index_line(m: int) -> np.ndarray:
    """Integer FFT frequencies [0, 1, ..., m/2-1, -m/2, ..., -1], exact."""
    idx = np.arange(m, dtype=np.float64)
    idx[m // 2:] -= m
    return idx


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on a periodic box together with its wavevector lattice.

    Parameters
    ----------
    n_per_axis:
        Points per axis; each must be even and >= 4.
    length_per_axis:
        Box edge lengths; defaults to 2*pi on every axis.
    """

    n_per_axis: tuple[int, ...]
    length_per_axis: tuple[float, ...] = ()

    _k: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)
    _idx: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)
    _k_sq: np.ndarray = field(init=False, repr=False, compare=False)
    _inv_k_sq: np.ndarray = field(init=False, repr=False, compare=False)
    _dealias: np.ndarray = field(init=False, repr=False, compare=False)
    _nyq_free: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = tuple(int(m) for m in self.n_per_axis)
        if len(n) not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3, got {len(n)}")
        for m in n:
            if m < 4 or m % 2 != 0:
                raise ValueError(f"points per axis must be even and >= 4, got {m}")
        lengths = self.length_per_axis or (TWO_PI,) * len(n)
        lengths = tuple(float(ell) for ell in lengths)
        if len(lengths) != len(n):
            raise ValueError("length_per_axis must match n_per_axis in length")
        if any(ell <= 0.0 for ell in lengths):
            raise ValueError("box edge lengths must be positive")
        object.__setattr__(self, "n_per_axis", n)
        object.__setattr__(self, "length_per_axis", lengths)

        ks, idxs = [], []
        for ax, (m, ell) in enumerate(zip(n, lengths)):
            line = _index_line(m)
            shape = [1] * len(n)
            shape[ax] = m
            idxs.append(line.reshape(shape))
            ks.append((TWO_PI / ell) * line.reshape(shape))
        k_sq = sum(k * k for k in ks)
        inv_k_sq = np.zeros_like(k_sq)
        np.divide(1.0, k_sq, out=inv_k_sq, where=k_sq > 0)
        # 2/3-rule mask: keep integer modes with |index| <= m // 3 per axis
        mask = np.ones(n, dtype=bool)
        for ax, m in enumerate(n):
            mask &= np.abs(idxs[ax]) <= m // 3
        # Nyquist-free mask: the index -m/2 has no conjugate partner, so odd
        # derivative multipliers on it break reality; the stepper confines
        # states to this subspace even with dealiasing off.
        nyq = np.ones(n, dtype=bool)
        for ax, m in enumerate(n):
            nyq &= idxs[ax] != -(m // 2)
        object.__setattr__(self, "_k", tuple(ks))
        object.__setattr__(self, "_idx", tuple(idxs))
        object.__setattr__(self, "_k_sq", k_sq)
        object.__setattr__(self, "_inv_k_sq", inv_k_sq)
        object.__setattr__(self, "_dealias", mask)
        object.__setattr__(self, "_nyq_free", nyq)

    # -- geometry ---------------------------------------------------------

    @property
    def d(self) -> int:
        return len(self.n_per_axis)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_per_axis

    @property
    def n_total(self) -> int:
        return int(np.prod(self.n_per_axis))

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for m, ell in zip(self.n_per_axis, self.length_per_axis):
            vol *= ell / m
        return vol

    @property
    def measure(self) -> float:
        vol = 1.0
        for ell in self.length_per_axis:
            vol *= ell
        return vol

    def axes(self) -> tuple[np.ndarray, ...]:
        """1D coordinate arrays along each axis."""
        return tuple(
            np.arange(m) * (ell / m)
            for m, ell in zip(self.n_per_axis, self.length_per_axis)
        )

    def meshes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij", sparse=True))

    # -- spectral machinery -------------------------------------------------

    @property
    def wavevectors(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavevector component arrays (2*pi/L_i times integers)."""
        return self._k

    @property
    def mode_indices(self) -> tuple[np.ndarray, ...]:
        """Broadcastable integer mode index arrays."""
        return self._idx

    @property
    def k_sq(self) -> np.ndarray:
        return self._k_sq

    @property
    def inv_k_sq(self) -> np.ndarray:
        """1/|k|^2 with the zero mode mapped to 0."""
        return self._inv_k_sq

    @property
    def dealias_mask(self) -> np.ndarray:
        return self._dealias

    @property
    def nyquist_free_mask(self) -> np.ndarray:
        """True away from the per-axis Nyquist lines (index -m/2)."""
        return self._nyq_free

    def mode_cube_mask(self, band: int) -> np.ndarray:
        """True on the mode cube |index|_inf <= band."""
        if band < 1:
            raise ValueError(f"band must be >= 1, got {band}")
        mask = np.ones(self.shape, dtype=bool)
        for idx in self._idx:
            mask &= np.abs(idx) <= band
        return mask

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        """Forward FFT over the trailing d axes (leading axes pass through)."""
        return np.fft.fftn(values, axes=tuple(range(-self.d, 0)))

    def to_physical(self, spec: np.ndarray) -> np.ndarray:
        """Inverse FFT over the trailing d axes, enforcing reality.

        Raises ValueError if the imaginary residue exceeds IMAG_RESIDUE_REL
        times the maximum magnitude of the result and the absolute floor
        IMAG_RESIDUE_ABS.  The floor keeps derived fields that cancel to
        rounding noise (e.g. the divergence of a solenoidal field) from
        failing a check that is vacuous for them; a genuine symmetry bug
        produces a residue comparable to the field itself, far above it.
        """
        w = np.fft.ifftn(spec, axes=tuple(range(-self.d, 0)))
        mag = float(np.max(np.abs(w))) if w.size else 0.0
        if mag > 0.0:
            resid = float(np.max(np.abs(w.imag)))
            if resid > IMAG_RESIDUE_REL * mag and resid > IMAG_RESIDUE_ABS:
                raise ValueError(
                    f"inverse transform lost reality: imaginary residue {resid:.3e} "
                    f"exceeds {IMAG_RESIDUE_REL:.0e} x max magnitude {mag:.3e}"
                )
        return np.ascontiguousarray(w.real)


def _check_values(grid: TorusGrid, values: np.ndarray, lead: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    want = (grid.d,) * lead + grid.shape
    if arr.shape != want:
        raise ValueError(f"field shape {arr.shape} does not match grid shape {want}")
    return arr


@dataclass
class ScalarField:
    """Real scalar field sampled on a TorusGrid."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = _check_values(self.grid, self.values, lead=0)

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: TorusGrid, fn: Callable[..., np.ndarray]) -> "ScalarField":
        return cls(grid, np.broadcast_to(fn(*grid.meshes()), grid.shape).copy())

    @classmethod
    def from_spectral(cls, grid: TorusGrid, spec: np.ndarray) -> "ScalarField":
        return cls(grid, grid.to_physical(spec))

    def spectral(self) -> np.ndarray:
        return self.grid.to_spectral(self.values)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class VectorField:
    """Real d-component vector field; components stacked on the first axis."""

    grid: TorusGrid
    components: np.ndarray

    def __post_init__(self) -> None:
        self.components = _check_values(self.grid, self.components, lead=1)

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "VectorField":
        return cls(grid, np.zeros((grid.d,) + grid.shape))

    @classmethod
    def from_functions(cls, grid: TorusGrid, fns: Sequence[Callable[..., np.ndarray]]) -> "VectorField":
        if len(fns) != grid.d:
            raise ValueError(f"need {grid.d} component functions, got {len(fns)}")
        meshes = grid.meshes()
        comps = np.stack([np.broadcast_to(fn(*meshes), grid.shape) for fn in fns])
        return cls(grid, comps.copy())

    @classmethod
    def from_spectral(cls, grid: TorusGrid, spec: np.ndarray) -> "VectorField":
        return cls(grid, grid.to_physical(spec))

    def spectral(self) -> np.ndarray:
        return self.grid.to_spectral(self.components)

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.components[i].copy())

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.components.copy())


def quadrature(grid: TorusGrid, values: np.ndarray) -> float:
    """Integral over the box by the uniform cell-volume rule.

    Exact for band-limited integrands; spectrally accurate for smooth ones.
    Leading (component) axes, if any, are summed as well.
    """
    return float(np.sum(values)) * grid.cell_volume


def spectral_l2_sq(grid: TorusGrid, spec: np.ndarray, weight: np.ndarray | None = None) -> float:
    """Squared L2 norm from spectral coefficients (Parseval), optionally
    weighted per mode; leading component axes are summed."""
    w = np.abs(spec) ** 2
    if weight is not None:
        w = w * weight
    return float(np.sum(w)) * grid.cell_volume / grid.n_total


def field_norms(f: ScalarField | VectorField) -> dict[str, float]:
    """Norms and extrema of a field.

    Returns keys l2, h1_semi, l1, linf, min, max, mean.  For scalars, mean is
    the average value (integral over the box divided by its measure).  For
    vector fields, l1 and linf use the pointwise Euclidean magnitude while
    min/max/mean are taken over raw component values.
    """
    grid = f.grid
    if isinstance(f, ScalarField):
        vals = f.values
        point_mag = np.abs(vals)
    else:
        vals = f.components
        point_mag = np.sqrt(np.sum(vals * vals, axis=0))
    spec = grid.to_spectral(vals)
    return {
        "l2": math.sqrt(max(spectral_l2_sq(grid, spec), 0.0)),
        "h1_semi": math.sqrt(max(spectral_l2_sq(grid, spec, grid.k_sq), 0.0)),
        "l1": quadrature(grid, point_mag),
        "linf": float(np.max(point_mag)),
        "min": float(np.min(vals)),
        "max": float(np.max(vals)),
        "mean": float(np.mean(vals)),
    }
