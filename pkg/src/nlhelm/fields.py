"""Discrete fields on a truncated cube [-L, L]^n with spectral transforms.

The continuum Fourier transform is realized with the unitary convention
(2pi)^{-n/2} integral of f(x) exp(-i<x,xi>) dx, discretized by the scaled
DFT on the uniform grid x_j = -L + j*dx.  The frequency lattice is
{k*pi/L : -N/2 <= k < N/2} per axis.
"""

import json
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "Grid", "ScalarField", "VectorField3", "SpectralField",
    "forward_transform", "inverse_transform", "lq_norm", "shell_average",
    "radial_profile", "boundary_mass_fraction", "dump_field", "load_field",
    "write_radial_profile_csv",
]

REAL_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform periodic sampling of the cube [-L, L]^n."""

    dim: int
    half_extent: float
    points_per_dim: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.half_extent <= 0:
            raise ValueError("half_extent must be positive")
        n = self.points_per_dim
        if n % 2 != 0 or n < 8:
            raise ValueError(f"points_per_dim must be even and >= 8, got {n}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points_per_dim

    @property
    def freq_spacing(self) -> float:
        return np.pi / self.half_extent

    @property
    def shape(self):
        return (self.points_per_dim,) * self.dim

    def axis(self) -> np.ndarray:
        return -self.half_extent + self.spacing * np.arange(self.points_per_dim)

    def freq_axis(self) -> np.ndarray:
        """Frequency axis in FFT (unshifted) order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_dim, d=self.spacing)

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    def meshes(self):
        return _meshes(self)

    def radius(self) -> np.ndarray:
        return _radius(self)

    def freq_radius_sq(self) -> np.ndarray:
        return _freq_radius_sq(self)


@lru_cache(maxsize=16)
def _meshes(grid: Grid):
    ax = grid.axis()
    return np.meshgrid(*([ax] * grid.dim), indexing="ij")


@lru_cache(maxsize=16)
def _radius(grid: Grid):
    r2 = sum(m ** 2 for m in _meshes(grid))
    return np.sqrt(r2)


@lru_cache(maxsize=16)
def _freq_radius_sq(grid: Grid):
    k = grid.freq_axis()
    ks = np.meshgrid(*([k] * grid.dim), indexing="ij")
    return sum(m ** 2 for m in ks)


@lru_cache(maxsize=16)
def _offset_phase(grid: Grid):
    """Per-axis phase exp(+i L xi_k) attached when the grid starts at -L."""
    return np.exp(1j * grid.half_extent * grid.freq_axis())


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray
    reality: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if self.reality:
            if np.iscomplexobj(self.values):
                scale = np.max(np.abs(self.values)) or 1.0
                if np.max(np.abs(self.values.imag)) > REAL_TOL * scale:
                    raise ValueError("reality flag set but imaginary part above tolerance")
                self.values = self.values.real.copy()
        elif not np.iscomplexobj(self.values):
            self.values = self.values.astype(np.float64)
            self.reality = True

    @classmethod
    def from_function(cls, grid: Grid, fn, reality=None):
        vals = fn(*grid.meshes())
        if reality is None:
            reality = not np.iscomplexobj(vals)
        return cls(grid, vals, reality=reality)

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(grid, np.zeros(grid.shape), reality=True)

    def copy(self):
        return replace(self, values=self.values.copy())

    def real_part(self):
        return ScalarField(self.grid, np.ascontiguousarray(self.values.real), reality=True)

    def __add__(self, other):
        return ScalarField(self.grid, self.values + other.values,
                           reality=self.reality and other.reality)

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - other.values,
                           reality=self.reality and other.reality)

    def __mul__(self, c):
        real = self.reality and not isinstance(c, complex)
        return ScalarField(self.grid, self.values * c, reality=real)

    __rmul__ = __mul__


@dataclass
class VectorField3:
    grid: Grid
    components: np.ndarray  # shape (3, N, N, N)
    reality: bool = False

    def __post_init__(self):
        if self.grid.dim != 3:
            raise ValueError("VectorField3 requires a 3d grid")
        self.components = np.asarray(self.components)
        if self.components.shape != (3,) + self.grid.shape:
            raise ValueError("components must have shape (3, N, N, N)")
        if not np.iscomplexobj(self.components):
            self.reality = True

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(grid, np.zeros((3,) + grid.shape), reality=True)

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.components[i], reality=self.reality)

    def magnitude(self) -> ScalarField:
        mag = np.sqrt(np.sum(np.abs(self.components) ** 2, axis=0))
        return ScalarField(self.grid, mag, reality=True)

    def real_part(self):
        return VectorField3(self.grid, np.ascontiguousarray(self.components.real), reality=True)

    def __add__(self, other):
        return VectorField3(self.grid, self.components + other.components,
                            reality=self.reality and other.reality)

    def __sub__(self, other):
        return VectorField3(self.grid, self.components - other.components,
                            reality=self.reality and other.reality)

    def __mul__(self, c):
        real = self.reality and not isinstance(c, complex)
        return VectorField3(self.grid, self.components * c, reality=real)

    __rmul__ = __mul__


@dataclass
class SpectralField:
    grid: Grid
    coeffs: np.ndarray  # FFT (unshifted) layout

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != self.grid.shape:
            raise ValueError("coeffs shape mismatch")


def forward_transform(f: ScalarField) -> SpectralField:
    """Scaled DFT approximating the unitary continuum Fourier transform."""
    g = f.grid
    scale = g.spacing ** g.dim * (2 * np.pi) ** (-g.dim / 2)
    coeffs = np.fft.fftn(f.values) * scale
    ph = _offset_phase(g)
    for ax in range(g.dim):
        shape = [1] * g.dim
        shape[ax] = -1
        coeffs = coeffs * ph.reshape(shape)
    return SpectralField(g, coeffs)


def inverse_transform(F: SpectralField, reality=None) -> ScalarField:
    g = F.grid
    coeffs = F.coeffs
    ph = np.conj(_offset_phase(g))
    for ax in range(g.dim):
        shape = [1] * g.dim
        shape[ax] = -1
        coeffs = coeffs * ph.reshape(shape)
    scale = g.freq_spacing ** g.dim * (2 * np.pi) ** (-g.dim / 2) * g.points_per_dim ** g.dim
    vals = np.fft.ifftn(coeffs) * scale
    if reality is None:
        scale_v = np.max(np.abs(vals)) or 1.0
        reality = np.max(np.abs(vals.imag)) <= REAL_TOL * scale_v
    if reality:
        vals = vals.real
    return ScalarField(g, vals, reality=reality)


def apply_multiplier(values: np.ndarray, grid: Grid, multiplier: np.ndarray) -> np.ndarray:
    """F^{-1}[ m(xi) F[v] ] on raw arrays; offset phases cancel for diagonal m."""
    out = np.fft.ifftn(multiplier * np.fft.fftn(values))
    if not np.iscomplexobj(values) and not np.iscomplexobj(multiplier):
        return out.real
    return out


def lq_norm(f, q: float) -> float:
    """Riemann-sum L^q norm; q = inf returns the grid maximum."""
    if q < 1:
        raise ValueError("q must be >= 1")
    vals = f.components if isinstance(f, VectorField3) else f.values
    absv = np.abs(vals)
    if isinstance(f, VectorField3):
        absv = np.sqrt(np.sum(absv ** 2, axis=0))
    if np.isinf(q):
        return float(np.max(absv))
    w = f.grid.spacing ** f.grid.dim
    return float((w * np.sum(absv ** q)) ** (1.0 / q))


def shell_average(f, R: float) -> float:
    """(1/R) * integral over B_R of |f|^2, by Riemann sum."""
    g = f.grid
    if not 0 < R <= g.half_extent:
        raise ValueError(f"R must lie in (0, L]; got R={R}, L={g.half_extent}")
    r = g.radius()
    vals = f.components if isinstance(f, VectorField3) else f.values
    a2 = np.abs(vals) ** 2
    if isinstance(f, VectorField3):
        a2 = np.sum(a2, axis=0)
    mask = r < R
    return float(g.spacing ** g.dim * np.sum(a2[mask]) / R)


def radial_profile(f, n_bins: int):
    """Equal-width radial bins on [0, L]: rows (radius, mean|f|, max|f|, count)."""
    if n_bins < 4:
        raise ValueError("n_bins must be >= 4")
    g = f.grid
    r = g.radius().ravel()
    vals = f.components if isinstance(f, VectorField3) else f.values
    absv = np.abs(vals)
    if isinstance(f, VectorField3):
        absv = np.sqrt(np.sum(absv ** 2, axis=0))
    absv = absv.ravel()
    edges = np.linspace(0.0, g.half_extent, n_bins + 1)
    idx = np.clip(np.digitize(r, edges) - 1, 0, n_bins - 1)
    inside = r <= g.half_extent
    rows = []
    for b in range(n_bins):
        sel = inside & (idx == b)
        center = 0.5 * (edges[b] + edges[b + 1])
        if not np.any(sel):
            rows.append((center, np.nan, np.nan, 0))
        else:
            rows.append((center, float(np.mean(absv[sel])), float(np.max(absv[sel])), int(np.sum(sel))))
    return rows


def boundary_mass_fraction(f, width_fraction: float = 0.1) -> float:
    """Fraction of the |f|^2 mass in the outer L-infinity shell of the box."""
    g = f.grid
    vals = f.components if isinstance(f, VectorField3) else f.values
    a2 = np.abs(vals) ** 2
    if isinstance(f, VectorField3):
        a2 = np.sum(a2, axis=0)
    linf = np.maximum.reduce([np.abs(m) for m in g.meshes()])
    shell = linf >= (1.0 - width_fraction) * g.half_extent
    total = np.sum(a2)
    if total == 0:
        return 0.0
    return float(np.sum(a2[shell]) / total)


def check_boundary_mass(f, warn_at=0.01, error_at=None, label="field"):
    frac = boundary_mass_fraction(f)
    if error_at is not None and frac > error_at:
        raise ValueError(f"{label}: boundary shell mass {frac:.3g} exceeds {error_at}")
    if frac > warn_at:
        warnings.warn(f"{label}: boundary shell mass {frac:.3g} exceeds {warn_at}", stacklevel=2)
    return frac


# ------------------------------------------------------------------- file IO

def dump_field(f, path):
    """Raw little-endian float64 dump (re/im interleaved if complex) + sidecar."""
    path = Path(path)
    if isinstance(f, VectorField3):
        vals = f.components
        ncomp = 3
        reality = f.reality
    else:
        vals = f.values
        ncomp = 1
        reality = f.reality
    flat = np.asarray(vals).ravel()
    if np.iscomplexobj(flat):
        inter = np.empty(2 * flat.size)
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        flat = inter
    flat.astype("<f8").tofile(path)
    sidecar = {
        "dim": f.grid.dim,
        "L": f.grid.half_extent,
        "N": f.grid.points_per_dim,
        "reality": bool(reality),
        "component_count": ncomp,
        "byte_order": "little",
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))


def load_field(path):
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = Grid(meta["dim"], meta["L"], meta["N"])
    raw = np.fromfile(path, dtype="<f8")
    shape = (meta["component_count"],) + grid.shape if meta["component_count"] > 1 else grid.shape
    n_expect = int(np.prod(shape))
    if meta["reality"]:
        vals = raw.reshape(shape)
    else:
        vals = (raw[0::2] + 1j * raw[1::2]).reshape(shape)
    if vals.size != n_expect:
        raise ValueError("field dump size does not match sidecar")
    if meta["component_count"] == 3:
        return VectorField3(grid, vals, reality=meta["reality"])
    return ScalarField(grid, vals, reality=meta["reality"])


def write_radial_profile_csv(rows, path):
    with open(path, "w") as fh:
        fh.write("radius,mean_abs,max_abs\n")
        for (r, mean, mx, count) in rows:
            if count == 0:
                fh.write(f"{r!r},,\n")
            else:
                fh.write(f"{r!r},{mean!r},{mx!r}\n")
