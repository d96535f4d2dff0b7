"""Herglotz waves: sphere-density synthesis, far-field envelope, PDE residual.

The scalar wave is (2pi)^{-n/2} * integral over S^{n-1}_lambda of
h(xi) exp(-i<x,xi>) dsigma(xi), evaluated by direct quadrature sum at every
grid point.  Vector waves are synthesized componentwise from tangential
densities and are divergence-free.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .fields import Grid, ScalarField, VectorField3, shell_average
from .sphere import SphereDensity, SphereQuadrature, evaluate_density

__all__ = [
    "HerglotzWave", "synthesize_scalar", "synthesize_vector", "pde_residual",
    "far_field_envelope", "verify_far_field", "agmon_shell_check",
    "spectral_divergence_residual",
]


@dataclass
class HerglotzWave:
    field: ScalarField | VectorField3
    density: SphereDensity
    quad: SphereQuadrature
    lam: float

    @property
    def grid(self) -> Grid:
        return self.field.grid


def _maybe_realify(values, hermitian):
    if hermitian:
        scale = np.max(np.abs(values)) or 1.0
        if np.max(np.abs(values.imag)) <= 1e-10 * scale:
            return values.real.copy(), True
    return values, False


def synthesize_scalar(h: SphereDensity, quad: SphereQuadrature, grid: Grid) -> HerglotzWave:
    if h.kind != "scalar":
        raise ValueError("scalar synthesis needs a scalar density")
    if grid.dim != h.dim:
        raise ValueError("dimension mismatch")
    hv = evaluate_density(h, quad)
    coeffs = (2 * np.pi) ** (-grid.dim / 2) * quad.weights * hv
    vals = kernels.synthesize((grid.axis(),) * grid.dim, quad.nodes, coeffs, sign=-1)
    vals, real = _maybe_realify(vals, h.is_hermitian(quad))
    return HerglotzWave(ScalarField(grid, vals, reality=real), h, quad, quad.lam)


def synthesize_vector(h: SphereDensity, quad: SphereQuadrature, grid: Grid) -> HerglotzWave:
    if h.kind != "tangential":
        raise ValueError("vector synthesis needs a tangential density")
    if h.tangency_residual(quad) > 1e-10:
        raise ValueError("density is not tangential on the quadrature nodes")
    hv = evaluate_density(h, quad)   # (3, M)
    axes = (grid.axis(),) * 3
    comps = []
    for c in range(3):
        coeffs = (2 * np.pi) ** -1.5 * quad.weights * hv[c]
        comps.append(kernels.synthesize(axes, quad.nodes, coeffs, sign=-1))
    vals = np.stack(comps)
    vals, real = _maybe_realify(vals, h.is_hermitian(quad))
    return HerglotzWave(VectorField3(grid, vals, reality=real), h, quad, quad.lam)


# ------------------------------------------------------------- PDE residual

def pde_residual(w: HerglotzWave) -> float:
    """Interior max of |(-Lap - lam) phi| (scalar) or |curlcurl phi - lam phi|
    (vector), 6th-order finite differences, normalized by max |phi|."""
    from ._fd import D1_STENCIL, fd_apply, fd_grad, fd_laplacian
    g = w.grid
    dx = g.spacing
    if isinstance(w.field, ScalarField):
        v = w.field.values
        resid = -fd_laplacian(v, dx) - w.lam * v
        margin = 3
        scale = np.max(np.abs(v))
    else:
        E = w.field.components
        lap = np.stack([fd_laplacian(E[c], dx) for c in range(3)])
        div = sum(fd_apply(E[c], c, D1_STENCIL, dx, 1) for c in range(3))
        grad_div = np.stack(fd_grad(div, dx))
        resid = grad_div - lap - w.lam * E
        margin = 6
        scale = np.max(np.abs(E))
    core = tuple(slice(margin, -margin) for _ in range(g.dim))
    if isinstance(w.field, VectorField3):
        core = (slice(None),) + core
    return float(np.max(np.abs(resid[core])) / (scale or 1.0))


def spectral_divergence_residual(w: HerglotzWave) -> float:
    """Relative divergence of a vector wave, differentiated under the
    quadrature sum: div E = -i (2pi)^{-3/2} sum_j w_j <h(xi_j), xi_j>
    e^{-i x.xi_j}, which tangentiality annihilates."""
    g = w.grid
    hv = evaluate_density(w.density, w.quad)
    ip = np.einsum("cn,nc->n", hv, w.quad.nodes)
    coeffs = -1j * (2 * np.pi) ** -1.5 * w.quad.weights * ip
    div = kernels.synthesize((g.axis(),) * 3, w.quad.nodes, coeffs, sign=-1)
    scale = np.sqrt(w.lam) * np.max(np.abs(w.field.components))
    return float(np.max(np.abs(div)) / (scale or 1.0))


# ---------------------------------------------------------------- far field

def far_field_envelope(h: SphereDensity, x, lam: float | None = None):
    """m_h(x) = e^{i a(x)} h(sqrt(lam) x^) + e^{-i a(x)} h(-sqrt(lam) x^)
    with a(x) = (n-1) pi/4 - sqrt(lam) |x|."""
    if lam is None:
        lam = h.lam
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    r = np.linalg.norm(pts, axis=-1)
    if np.any(r == 0):
        raise ValueError("far-field envelope is undefined at x = 0")
    n = h.dim
    sl = np.sqrt(lam)
    alpha = (n - 1) * np.pi / 4 - sl * r
    hp = h.evaluate_at_points(sl * pts / r[..., None])
    hm = h.evaluate_at_points(-sl * pts / r[..., None])
    out = np.exp(1j * alpha) * hp + np.exp(-1j * alpha) * hm
    return out[..., 0] if single and out.ndim else (out[0] if single else out)


def _leading_asymptotic(w: HerglotzWave, mask):
    """(1/sqrt(2pi)) (sqrt(lam)/|x|)^{(n-1)/2} m_h(x) at masked grid points."""
    g = w.grid
    pts = np.stack([m.ravel() for m in g.meshes()], axis=-1)[mask]
    r = np.linalg.norm(pts, axis=-1)
    mh = far_field_envelope(w.density, pts, lam=w.lam)
    amp = (np.sqrt(w.lam) / r) ** ((g.dim - 1) / 2) / np.sqrt(2 * np.pi)
    return amp * mh if mh.ndim == 1 else amp[None, :] * mh


def verify_far_field(w: HerglotzWave, radii, inner_radius: float | None = None):
    """Shell errors (1/R) int_{r0<|x|<R} |phi - leading asymptotic|^2 dx."""
    g = w.grid
    if inner_radius is None:
        inner_radius = max(1.0 / np.sqrt(w.lam), 2 * g.spacing)
    r = g.radius().ravel()
    mask = r > inner_radius
    pred = _leading_asymptotic(w, mask)
    if isinstance(w.field, ScalarField):
        vals = w.field.values.ravel()[mask]
    else:
        vals = w.field.components.reshape(3, -1)[:, mask]
    diff2 = np.abs(vals - pred) ** 2
    if diff2.ndim == 2:
        diff2 = np.sum(diff2, axis=0)
    w_el = g.spacing ** g.dim
    out = []
    for R in radii:
        if not 0 < R <= g.half_extent:
            raise ValueError("radii must lie in (0, L]")
        sel = r[mask] < R
        out.append((float(R), float(w_el * np.sum(diff2[sel]) / R)))
    return out


def agmon_shell_check(w: HerglotzWave, R: float):
    """Computed shell average of |phi|^2 at R against the sphere-integral
    limit (1/pi) * integral |h|^2 dsigma_lambda (unitary transform scaling)."""
    hv = evaluate_density(w.density, w.quad)
    a2 = np.abs(hv) ** 2
    if a2.ndim == 2:
        a2 = np.sum(a2, axis=0)
    predicted = float(np.sum(w.quad.weights * a2) / np.pi)
    computed = shell_average(w.field, R)
    return computed, predicted
