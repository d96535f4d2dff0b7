"""Sphere S^{n-1}_lambda = {|xi|^2 = lambda}: quadrature, densities, symmetry.

Densities are truncated harmonic expansions (Fourier series on the circle,
spherical / vector spherical harmonics on S^2), so the smoothness class is
structural and C^m norms are computed by spectral differentiation.  The
Hermitian antipodal symmetry h(xi) = conj(h(-xi)) and, for vector densities,
tangency <h(xi), xi> = 0 are enforced by coefficient-space projectors.
"""

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .fields import Grid, ScalarField

__all__ = [
    "SphereQuadrature", "SphereDensity", "CylSymmetryTag", "build_quadrature",
    "evaluate_density", "cm_norm_estimate", "project_cylindrical",
    "restrict_spectrum_to_sphere", "random_density", "density_to_json",
    "density_from_json",
]


# ----------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class SphereQuadrature:
    dim: int
    lam: float
    nodes: np.ndarray     # (M, dim) points on the radius-sqrt(lam) sphere
    weights: np.ndarray   # (M,) positive, summing to sigma_lambda(S)
    theta: np.ndarray     # polar angle (n=3) or angle (n=2), per node
    phi: np.ndarray       # azimuth (n=3), zeros for n=2

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.lam))

    def antipodal_index(self) -> np.ndarray:
        """Permutation sending each node to its antipode (validates closure)."""
        nodes = self.nodes
        idx = np.empty(len(nodes), dtype=int)
        scale = self.radius
        for i, p in enumerate(nodes):
            d = np.linalg.norm(nodes + p, axis=1)
            j = int(np.argmin(d))
            if d[j] > 1e-9 * max(scale, 1.0):
                raise ValueError("quadrature is not antipodally closed")
            idx[i] = j
        return idx

    def surface_measure(self) -> float:
        return float(np.sum(self.weights))


def build_quadrature(n: int, lam: float, resolution: int) -> SphereQuadrature:
    """n=2: uniform angles; n=3: Gauss-Legendre polar x uniform azimuth."""
    if n not in (2, 3):
        raise ValueError("n must be 2 or 3")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if resolution % 2 != 0:
        raise ValueError("resolution must be even (antipodal closure)")
    rad = np.sqrt(lam)
    if n == 2:
        theta = 2 * np.pi * np.arange(resolution) / resolution
        nodes = rad * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        weights = np.full(resolution, 2 * np.pi * rad / resolution)
        return SphereQuadrature(2, lam, nodes, weights, theta, np.zeros(resolution))
    t, w = np.polynomial.legendre.leggauss(resolution)
    m_phi = 2 * resolution
    phi1 = 2 * np.pi * np.arange(m_phi) / m_phi
    theta1 = np.arccos(t)
    TH, PH = np.meshgrid(theta1, phi1, indexing="ij")
    st = np.sin(TH)
    nodes = rad * np.stack([st * np.cos(PH), st * np.sin(PH), np.cos(TH)], axis=-1)
    weights = lam * np.outer(w, np.full(m_phi, 2 * np.pi / m_phi))
    return SphereQuadrature(3, lam, nodes.reshape(-1, 3), weights.ravel(),
                            TH.ravel(), PH.ravel())


# --------------------------------------------- spherical harmonic machinery

def _lm_index(lmax):
    """Packed (l, m) arrays for index l*l + l + m."""
    ls, ms = [], []
    for l in range(lmax + 1):
        for m in range(-l, l + 1):
            ls.append(l)
            ms.append(m)
    return np.array(ls), np.array(ms)


def _legendre_norm_table(lmax, theta, n_deriv=0):
    """Orthonormal associated Legendre P~_l^m(cos theta) for m >= 0.

    Returns arrays shaped (lmax+1, lmax+1, npts) indexed [l, m]; only
    entries m <= l are populated.  With n_deriv >= 1 also returns d/dtheta,
    with n_deriv >= 2 also d^2/dtheta^2 (via the Legendre ODE).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    npts = theta.size
    ct, st = np.cos(theta), np.sin(theta)
    P = np.zeros((lmax + 1, lmax + 1, npts))
    P[0, 0] = np.sqrt(1.0 / (4 * np.pi))
    for m in range(1, lmax + 1):
        P[m, m] = -np.sqrt((2 * m + 1) / (2.0 * m)) * st * P[m - 1, m - 1]
    for m in range(0, lmax):
        P[m + 1, m] = np.sqrt(2 * m + 3.0) * ct * P[m, m]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
            P[l, m] = a * (ct * P[l - 1, m] - b * P[l - 2, m])
    if n_deriv == 0:
        return (P,)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_st = np.where(st > 1e-14, 1.0 / np.maximum(st, 1e-300), 0.0)
    cot = ct * inv_st
    dP = np.zeros_like(P)
    for m in range(0, lmax + 1):
        for l in range(m, lmax + 1):
            term = l * cot * P[l, m]
            if l > m:
                c = np.sqrt((2 * l + 1.0) / (2 * l - 1.0) * (l * l - m * m))
                term = term - c * inv_st * P[l - 1, m]
            dP[l, m] = term
    if n_deriv == 1:
        return P, dP
    d2P = np.zeros_like(P)
    for m in range(0, lmax + 1):
        for l in range(m, lmax + 1):
            d2P[l, m] = -cot * dP[l, m] - (l * (l + 1.0) - m * m * inv_st ** 2) * P[l, m]
    return P, dP, d2P


def _sph_table(lmax, theta, phi, n_deriv=0):
    """Y_l^m tables shaped (n_lm, npts); optional theta-derivative tables.

    Complex harmonics with Condon-Shortley phase, orthonormal on S^2;
    Y_l^{-m} = (-1)^m conj(Y_l^m).
    """
    theta = np.atleast_1d(theta)
    phi = np.atleast_1d(phi)
    tabs = _legendre_norm_table(lmax, theta, n_deriv=n_deriv)
    ls, ms = _lm_index(lmax)
    eim = {m: np.exp(1j * m * phi) for m in range(-lmax, lmax + 1)}
    out = []
    for tab in tabs:
        T = np.zeros((len(ls), theta.size), dtype=complex)
        for i, (l, m) in enumerate(zip(ls, ms)):
            am = abs(m)
            base = tab[l, am] * eim[m]
            if m < 0:
                base = base * (-1.0) ** am
            T[i] = base
        out.append(T)
    return tuple(out)


def _frame(theta, phi):
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    e_r = np.stack([st * cp, st * sp, ct])
    e_th = np.stack([ct * cp, ct * sp, -st])
    e_ph = np.stack([-sp, cp, np.zeros_like(sp)])
    return e_r, e_th, e_ph


# ----------------------------------------------------------------- densities

@dataclass
class CylSymmetryTag:
    is_cylindrical: bool
    residual: float


@dataclass
class SphereDensity:
    """Truncated harmonic density on S^{n-1}_lambda.

    kind "scalar": coeffs packed over (l, m) (n=3) or Fourier modes (n=2).
    kind "tangential" (n=3 only): psi/phi coefficients over the normalized
    vector harmonics Psi_lm = grad_S Y_lm / sqrt(l(l+1)),
    Phi_lm = x^ x Psi_lm, l >= 1.
    """

    dim: int
    lam: float
    kind: str
    coeffs: np.ndarray | None = None      # scalar kinds
    psi: np.ndarray | None = None         # tangential kind
    phi: np.ndarray | None = None
    smoothness_order: int = 0
    cm_bound: float = np.inf

    def __post_init__(self):
        if self.kind not in ("scalar", "tangential"):
            raise ValueError("kind must be scalar|tangential")
        if self.kind == "tangential" and self.dim != 3:
            raise ValueError("tangential densities require dim=3")
        if self.smoothness_order == 0:
            self.smoothness_order = (self.dim - 1) // 2 + 1
        for name in ("coeffs", "psi", "phi"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, np.asarray(v, dtype=complex))

    # -- structural metadata

    @property
    def lmax(self) -> int:
        if self.dim == 2:
            return (len(self.coeffs) - 1) // 2
        n = len(self.coeffs) if self.kind == "scalar" else len(self.psi)
        return int(round(np.sqrt(n))) - 1

    # -- algebra

    def __mul__(self, c):
        kw = {}
        for name in ("coeffs", "psi", "phi"):
            v = getattr(self, name)
            kw[name] = None if v is None else v * c
        return replace(self, **kw)

    __rmul__ = __mul__

    def __sub__(self, other):
        kw = {}
        for name in ("coeffs", "psi", "phi"):
            v, w = getattr(self, name), getattr(other, name)
            kw[name] = None if v is None else v - w
        return replace(self, **kw)

    def __add__(self, other):
        kw = {}
        for name in ("coeffs", "psi", "phi"):
            v, w = getattr(self, name), getattr(other, name)
            kw[name] = None if v is None else v + w
        return replace(self, **kw)

    # -- symmetry filters

    def hermitize(self):
        """Project onto the Hermitian antipodal subspace (X^delta / Z)."""
        if self.dim == 2:
            k = len(self.coeffs) // 2
            c = self.coeffs.copy()
            new = np.empty_like(c)
            for kk in range(-k, k + 1):
                new[k + kk] = 0.5 * (c[k + kk] + (-1.0) ** kk * np.conj(c[k - kk]))
            return replace(self, coeffs=new)
        ls, ms = _lm_index(self.lmax)
        if self.kind == "scalar":
            c = self.coeffs
            new = np.empty_like(c)
            for i, (l, m) in enumerate(zip(ls, ms)):
                j = l * l + l - m
                new[i] = 0.5 * (c[i] + (-1.0) ** (l + m) * np.conj(c[j]))
            return replace(self, coeffs=new)
        p, q = self.psi, self.phi
        new_p, new_q = np.empty_like(p), np.empty_like(q)
        for i, (l, m) in enumerate(zip(ls, ms)):
            j = l * l + l - m
            new_p[i] = 0.5 * (p[i] + (-1.0) ** (l + 1 + m) * np.conj(p[j]))
            new_q[i] = 0.5 * (q[i] + (-1.0) ** (l + m) * np.conj(q[j]))
        new_p[0] = new_q[0] = 0.0
        return replace(self, psi=new_p, phi=new_q)

    # -- evaluation

    def evaluate_angles(self, theta, phi=None, _tables=None):
        """Values at angles: complex (npts,) scalar or (3, npts) tangential."""
        if self.dim == 2:
            theta = np.atleast_1d(theta)
            k = len(self.coeffs) // 2
            modes = np.arange(-k, k + 1)
            return np.exp(1j * np.outer(modes, theta)).T @ self.coeffs
        theta = np.atleast_1d(theta)
        phi = np.atleast_1d(phi)
        if self.kind == "scalar":
            (Y,) = _sph_table(self.lmax, theta, phi) if _tables is None else _tables
            return Y.T @ self.coeffs
        Y, dY = _sph_table(self.lmax, theta, phi, n_deriv=1) if _tables is None else _tables
        ls, _ = _lm_index(self.lmax)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_st = np.where(np.sin(theta) > 1e-14, 1.0 / np.maximum(np.sin(theta), 1e-300), 0.0)
        norm = np.where(ls > 0, 1.0 / np.sqrt(np.maximum(ls * (ls + 1.0), 1.0)), 0.0)
        # frame components of grad_S Y: (dY, i m Y / sin)
        ms = _lm_index(self.lmax)[1]
        grad_th = dY * norm[:, None]
        grad_ph = (1j * ms[:, None]) * Y * inv_st[None, :] * norm[:, None]
        a_th = grad_th.T @ self.psi - grad_ph.T @ self.phi
        a_ph = grad_ph.T @ self.psi + grad_th.T @ self.phi
        _, e_th, e_ph = _frame(theta, phi)
        return e_th * a_th[None, :] + e_ph * a_ph[None, :]

    def evaluate_nodes(self, quad: SphereQuadrature):
        return self.evaluate_angles(quad.theta, quad.phi)

    def evaluate_at_points(self, points):
        """Values at arbitrary nonzero points (radially projected)."""
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, pts.shape[-1])
        r = np.linalg.norm(flat, axis=1)
        if np.any(r == 0):
            raise ValueError("cannot evaluate density at the origin")
        u = flat / r[:, None]
        if self.dim == 2:
            ang = np.arctan2(u[:, 1], u[:, 0])
            return self.evaluate_angles(ang).reshape(pts.shape[:-1])
        theta = np.arccos(np.clip(u[:, 2], -1, 1))
        phi = np.arctan2(u[:, 1], u[:, 0])
        if self.kind == "scalar":
            return self.evaluate_angles(theta, phi).reshape(pts.shape[:-1])
        comps = self._component_expansions()
        vals = np.stack([c.evaluate_angles(theta, phi) for c in comps])
        return vals.reshape((3,) + pts.shape[:-1])

    def _component_expansions(self):
        """Cartesian components re-fit as scalar harmonic expansions.

        Pole-safe evaluation route; exact because VSH components are
        spherical polynomials of degree <= lmax + 1.
        """
        lfit = self.lmax + 1
        quad = build_quadrature(3, 1.0, max(2 * (lfit + 2), 16))
        vals = self.evaluate_angles(quad.theta, quad.phi)
        (Y,) = _sph_table(lfit, quad.theta, quad.phi)
        out = []
        for c in range(3):
            coeff = (Y * quad.weights[None, :]) @ np.conj(vals[c])
            out.append(SphereDensity(3, self.lam, "scalar", coeffs=np.conj(coeff),
                                     smoothness_order=self.smoothness_order))
        return out

    def is_hermitian(self, quad: SphereQuadrature, tol=1e-12) -> bool:
        vals = self.evaluate_nodes(quad)
        anti = quad.antipodal_index()
        if self.kind == "scalar":
            d = np.max(np.abs(vals - np.conj(vals[anti])))
            scale = max(np.max(np.abs(vals)), 1e-300)
        else:
            d = np.max(np.abs(vals - np.conj(vals[:, anti])))
            scale = max(np.max(np.abs(vals)), 1e-300)
        return bool(d <= tol * max(1.0, scale))

    def tangency_residual(self, quad: SphereQuadrature) -> float:
        vals = self.evaluate_nodes(quad)
        ip = np.einsum("cn,nc->n", vals, quad.nodes)
        scale = max(np.max(np.abs(vals)) * quad.radius, 1e-300)
        return float(np.max(np.abs(ip)) / scale)


def evaluate_density(h: SphereDensity, quad: SphereQuadrature):
    if quad.dim != h.dim:
        raise ValueError("dimension mismatch")
    return h.evaluate_nodes(quad)


# ------------------------------------------------------------------ C^m norm

def cm_norm_estimate(h: SphereDensity, m: int | None = None, oversample: int = 4) -> float:
    """sup-norm estimate of intrinsic derivatives up to order m.

    Arc-length derivatives on the radius-sqrt(lam) sphere carry a factor
    lam^{-1/2} per order.
    """
    if m is None:
        m = h.smoothness_order
    if m < 0:
        raise ValueError("m must be >= 0")
    if m > 2 and h.dim == 3:
        raise NotImplementedError("n=3 C^m estimation implemented for m <= 2")
    rad = np.sqrt(h.lam)
    if h.dim == 2:
        k = len(h.coeffs) // 2
        npts = max(oversample * (2 * k + 1), 64)
        theta = 2 * np.pi * np.arange(npts) / npts
        modes = np.arange(-k, k + 1)
        E = np.exp(1j * np.outer(theta, modes))
        best = 0.0
        for j in range(m + 1):
            dj = E @ (h.coeffs * (1j * modes) ** j)
            best = max(best, float(np.max(np.abs(dj))) / rad ** j)
        return best

    lmax = h.lmax
    res = max(2 * (lmax + 3), 16)
    quad = build_quadrature(3, 1.0, res + res % 2)
    theta, phi = quad.theta, quad.phi
    if h.kind == "tangential":
        comps = h._component_expansions()
        return max(cm_norm_estimate(replace(c, lam=h.lam), m, oversample) for c in comps)

    Y, dY, d2Y = _sph_table(lmax, theta, phi, n_deriv=2)
    ms = _lm_index(lmax)[1]
    c = h.coeffs
    st = np.sin(theta)
    inv_st = 1.0 / st
    cot = np.cos(theta) * inv_st
    f = Y.T @ c
    best = float(np.max(np.abs(f)))
    if m >= 1:
        f_th = dY.T @ c
        f_ph = Y.T @ (c * 1j * ms)
        grad = np.sqrt(np.abs(f_th) ** 2 + np.abs(f_ph * inv_st) ** 2)
        best = max(best, float(np.max(grad)) / rad)
    if m >= 2:
        f_thth = d2Y.T @ c
        f_thph = dY.T @ (c * 1j * ms)
        f_phph = Y.T @ (c * (1j * ms) ** 2)
        h_tt = f_thth
        h_tp = (f_thph - cot * f_ph) * inv_st
        h_pp = f_phph * inv_st ** 2 + cot * f_th
        hess = np.sqrt(np.abs(h_tt) ** 2 + 2 * np.abs(h_tp) ** 2 + np.abs(h_pp) ** 2)
        best = max(best, float(np.max(hess)) / rad ** 2)
    return best


# ----------------------------------------------------- cylindrical projection

def project_cylindrical(h: SphereDensity, quad: SphereQuadrature | None = None):
    """Least-squares projection onto the cylindrically symmetric subspace.

    Cylindrical tangential densities are exactly the span of the m=0
    toroidal harmonics Phi_{l,0} = dY_l0/dtheta * e_phi, so the projection
    zeroes every other coefficient.  Idempotent.
    """
    if h.kind != "tangential":
        raise ValueError("cylindrical projection applies to tangential densities")
    ls, ms = _lm_index(h.lmax)
    keep = (ms == 0) & (ls >= 1)
    new_psi = np.zeros_like(h.psi)
    new_phi = np.where(keep, h.phi, 0.0)
    proj = replace(h, psi=new_psi, phi=new_phi)
    if quad is None:
        quad = build_quadrature(3, h.lam, max(2 * (h.lmax + 2), 16))
    v0 = h.evaluate_nodes(quad)
    v1 = proj.evaluate_nodes(quad)
    scale = max(np.max(np.abs(v0)), 1e-300)
    residual = float(np.max(np.abs(v0 - v1)) / scale)
    tag = CylSymmetryTag(is_cylindrical=residual <= 1e-10, residual=residual)
    return proj, tag


# --------------------------------------------------- spectrum on the sphere

def restrict_spectrum_to_sphere(f: ScalarField, quad: SphereQuadrature):
    """Continuum Fourier transform of the sampled field at the sphere nodes."""
    g = f.grid
    if g.dim != quad.dim:
        raise ValueError("dimension mismatch")
    if quad.radius >= g.nyquist:
        raise ValueError(f"sphere radius {quad.radius:.3g} is beyond the grid "
                         f"Nyquist frequency {g.nyquist:.3g}")
    scale = g.spacing ** g.dim * (2 * np.pi) ** (-g.dim / 2)
    axes = (g.axis(),) * g.dim
    return scale * kernels.restrict(f.values, axes, quad.nodes)


# -------------------------------------------------------------- construction

def random_density(n, lam, kind, degree, rng, cm_target=None, m=None):
    """Random Hermitian density with smoothly decaying coefficients."""
    if m is None:
        m = (n - 1) // 2 + 1
    if n == 2:
        k = degree
        c = rng.standard_normal(2 * k + 1) + 1j * rng.standard_normal(2 * k + 1)
        decay = (1.0 + np.abs(np.arange(-k, k + 1))) ** (-(m + 2.0))
        h = SphereDensity(2, lam, "scalar", coeffs=c * decay, smoothness_order=m)
    else:
        ls, _ = _lm_index(degree)
        size = len(ls)
        decay = (1.0 + ls) ** (-(m + 2.0))
        if kind == "scalar":
            c = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * decay
            h = SphereDensity(3, lam, "scalar", coeffs=c, smoothness_order=m)
        else:
            p = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * decay
            q = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * decay
            p[0] = q[0] = 0.0
            h = SphereDensity(3, lam, "tangential", psi=p, phi=q, smoothness_order=m)
    h = h.hermitize()
    if cm_target is not None:
        norm = cm_norm_estimate(h, m)
        if norm > 0:
            h = h * (cm_target / norm)
        h = replace(h, cm_bound=cm_target)
    return h


# ------------------------------------------------------------------- file IO

def density_to_json(h: SphereDensity, path=None):
    def pack(arr):
        return None if arr is None else [[float(z.real), float(z.imag)] for z in arr]

    doc = {
        "schema_version": 1,
        "kind": h.kind,
        "n": h.dim,
        "lambda": h.lam,
        ("k_max" if h.dim == 2 else "l_max"): h.lmax,
        "coefficients": pack(h.coeffs),
        "psi": pack(h.psi),
        "phi": pack(h.phi),
        "declared_m": h.smoothness_order,
        "declared_delta": None if np.isinf(h.cm_bound) else h.cm_bound,
    }
    text = json.dumps(doc, indent=2)
    if path is not None:
        Path(path).write_text(text)
    return text


def density_from_json(source):
    p = Path(source)
    doc = json.loads(p.read_text() if p.exists() else source)

    def unpack(v):
        return None if v is None else np.array([complex(re, im) for re, im in v])

    delta = doc.get("declared_delta")
    return SphereDensity(
        dim=doc["n"], lam=doc["lambda"], kind=doc["kind"],
        coeffs=unpack(doc.get("coefficients")),
        psi=unpack(doc.get("psi")), phi=unpack(doc.get("phi")),
        smoothness_order=doc.get("declared_m", 0),
        cm_bound=np.inf if delta is None else delta,
    )
