"""Nonlinearity models for the assumption classes (A), (A'), (B).

Class (A): scalar Caratheodory f with |f(x,z)| <= Q(x)|z|^{p-1} and the
matching Lipschitz bound for |z| <= 1.  Class (A'): cylindrical-compatible
vector form f_0(sqrt(x1^2+x2^2), x3, |E|^2) E.  Class (B): vector f with the
global bounds carrying the (1+|E|)^{p~-p} factor, 1 <= s <= 2 <= p, p~ <= 2.

Also the smooth odd truncation chi (identity on [-1/2, 1/2], saturating at
1 by |z| = 2) and the sharp constant alpha_{p,p~}.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .fields import Grid, ScalarField, VectorField3

__all__ = [
    "Truncation", "NonlinearitySpec", "Weight", "apply", "apply_truncated",
    "alpha_constant", "validate_assumption", "AssumptionReport",
]


# ---------------------------------------------------------------- truncation

def _ramp(u):
    """C-infinity monotone ramp s(u) = sigma(u) / (sigma(u) + sigma(1-u))."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    return a / (a + b)


@lru_cache(maxsize=1)
def _profile_gamma():
    """Exponent gamma with integral_0^1 (1 - s(u))^gamma du = 1/3, which makes
    the truncation reach its plateau exactly at |z| = 2."""
    u = np.linspace(0.0, 1.0, 8193)
    base = 1.0 - _ramp(u)

    def integral(g):
        return np.trapezoid(base ** g, u)

    lo, hi = 0.5, 8.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if integral(mid) > 1.0 / 3.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=1)
def _chi_spline():
    """Cubic spline of chi on [1/2, 2] from the calibrated C-infinity profile."""
    gamma = _profile_gamma()
    tt = np.linspace(0.5, 2.0, 4097)
    phi = (1.0 - _ramp((tt - 0.5) / 1.5)) ** gamma
    from scipy.integrate import cumulative_simpson
    c = 0.5 + cumulative_simpson(phi, x=tt, initial=0.0)
    c *= 1.0 / c[-1]   # pin the plateau value to exactly 1
    return CubicSpline(tt, c)


@dataclass(frozen=True)
class Truncation:
    """Smooth odd chi with chi(z) = z on [-1/2, 1/2], |chi| <= min(|z|, 1),
    chi = sign(z) for |z| >= 2."""

    inner_radius: float = 0.5
    outer_radius: float = 2.0

    def chi(self, z):
        z = np.asarray(z, dtype=float)
        a = np.abs(z)
        out = np.where(a <= 0.5, a, 1.0)
        mid = (a > 0.5) & (a < 2.0)
        if np.any(mid):
            out = np.where(mid, _chi_spline()(np.clip(a, 0.5, 2.0)), out)
        return np.sign(z) * out

    def ratio(self, t):
        """chi(t)/t for t >= 0 with the removable singularity at 0."""
        t = np.asarray(t, dtype=float)
        safe = np.maximum(t, 1e-300)
        return np.where(t <= 0.5, 1.0, self.chi(safe) / safe)

    def truncate_vector(self, components):
        mag = np.sqrt(np.sum(np.abs(components) ** 2, axis=0))
        return components * self.ratio(mag)[None, ...]


# -------------------------------------------------------------------- weight

@dataclass(frozen=True)
class Weight:
    """Closed-form weight Q: constant, gaussian or compactly supported bump."""

    kind: str = "constant"
    amplitude: float = 1.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "gaussian", "bump"):
            raise ValueError(f"unknown weight kind {self.kind!r}")

    def evaluate(self, grid: Grid) -> np.ndarray:
        r = grid.radius()
        if self.kind == "constant":
            return np.full(grid.shape, self.amplitude)
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-r ** 2 / (2 * self.width ** 2))
        u = r / self.width
        out = np.zeros(grid.shape)
        inside = u < 1.0
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out

    def is_radial(self) -> bool:
        return True


# ---------------------------------------------------------------- main spec

@dataclass
class NonlinearitySpec:
    """Declared nonlinearity with its assumption class and exponents.

    Forms: "zero"; "power" f = Q(x)|z|^{p-2} z (scalar or vector);
    "saturated" f = delta |E|^2 Gamma(x) E / (1 + P |E|^2) (vector, class B,
    envelope exponents p = 4, p~ = 2); or a user callable fn(r2_meshes..) .
    """

    class_tag: str
    form: str
    p: float
    s: float = math.inf
    p_tilde: float = 2.0
    Q: Weight = field(default_factory=Weight)
    sat_delta: float = 1.0
    sat_P: float = 1.0
    fn: object = None

    def __post_init__(self):
        if self.class_tag not in ("A", "A'", "B"):
            raise ValueError("class_tag must be A, A' or B")
        if self.form not in ("zero", "power", "saturated", "user"):
            raise ValueError(f"unknown form {self.form!r}")
        if self.class_tag == "B":
            if not (1 <= self.s <= 2 <= self.p and self.p_tilde <= 2):
                raise ValueError("class (B) needs 1 <= s <= 2 <= p and p~ <= 2")
        elif self.p < 2:
            raise ValueError("growth exponent p must be >= 2")
        if self.form == "saturated":
            if self.class_tag != "B":
                raise ValueError("saturated form is a class (B) nonlinearity")
            self.p, self.p_tilde = 4.0, 2.0

    def weight_on(self, grid: Grid) -> np.ndarray:
        Q = self.Q.evaluate(grid)
        if self.form == "saturated":
            # growth envelope: sup over t of (1+t)^2/(1+P t^2) = 1 + 1/P
            return self.sat_delta * Q * (1.0 + 1.0 / self.sat_P)
        return Q

    def scaled(self, factor: float):
        """Scale the nonlinearity strength (the Q-scaling knob)."""
        out = NonlinearitySpec.__new__(NonlinearitySpec)
        out.__dict__.update(self.__dict__)
        if self.form == "saturated":
            out.sat_delta = self.sat_delta * factor
        else:
            out.Q = Weight(self.Q.kind, self.Q.amplitude * factor, self.Q.width)
        return out


def apply(spec: NonlinearitySpec, u):
    """Pointwise f(x, u(x))."""
    if spec.form == "zero":
        return u.copy() * 0.0
    if isinstance(u, ScalarField):
        grid = u.grid
        if spec.form == "user":
            return ScalarField(grid, spec.fn(grid, u.values), reality=u.reality)
        if spec.form != "power":
            raise ValueError("scalar nonlinearities support forms zero|power|user")
        Q = spec.Q.evaluate(grid)
        vals = Q * np.abs(u.values) ** (spec.p - 2) * u.values
        return ScalarField(grid, vals, reality=u.reality)
    grid = u.grid
    E = u.components
    mag = np.sqrt(np.sum(np.abs(E) ** 2, axis=0))
    if spec.form == "user":
        return VectorField3(grid, spec.fn(grid, E), reality=u.reality)
    if spec.form == "power":
        Q = spec.Q.evaluate(grid)
        return VectorField3(grid, Q * mag ** (spec.p - 2) * E, reality=u.reality)
    Q = spec.Q.evaluate(grid)
    sat = spec.sat_delta * Q * mag ** 2 / (1.0 + spec.sat_P * mag ** 2)
    return VectorField3(grid, sat * E, reality=u.reality)


def apply_truncated(spec: NonlinearitySpec, chi: Truncation, u):
    """f(x, chi(u)) (scalar) or f(x, chi(|E|) E/|E|) (vector)."""
    if isinstance(u, ScalarField):
        truncated = ScalarField(u.grid, chi.chi(u.values), reality=True)
        return apply(spec, truncated)
    truncated = VectorField3(u.grid, chi.truncate_vector(u.components),
                             reality=u.reality)
    return apply(spec, truncated)


# ------------------------------------------------------------ alpha constant

def alpha_constant(p: float, p_tilde: float) -> float:
    """sup_z |z|^{p-2} (1+|z|)^{p~-p} = (p-2)^{p-2} (2-p~)^{2-p~} / (p-p~)^{p-p~}
    with the 0^0 := 1 convention."""
    if not (p_tilde <= 2 <= p):
        raise ValueError("alpha constant requires p~ <= 2 <= p")

    def pw(base, expo):
        return 1.0 if expo == 0 else base ** expo

    return pw(p - 2, p - 2) * pw(2 - p_tilde, 2 - p_tilde) / pw(p - p_tilde, p - p_tilde)


# ---------------------------------------------------------------- validation

@dataclass
class AssumptionReport:
    class_tag: str
    worst_growth: float
    worst_lipschitz: float
    growth_witness: tuple
    lipschitz_witness: tuple

    @property
    def passed(self) -> bool:
        return self.worst_growth <= 1 + 1e-9 and self.worst_lipschitz <= 1 + 1e-9


def _pointwise_scalar(spec, Qx, z):
    if spec.form == "zero":
        return np.zeros_like(z)
    return Qx * np.abs(z) ** (spec.p - 2) * z


def _pointwise_vector(spec, Qx, E):
    mag = np.linalg.norm(E, axis=-1)
    if spec.form == "zero":
        return np.zeros_like(E)
    if spec.form == "power":
        return Qx[..., None] * mag[..., None] ** (spec.p - 2) * E
    sat = spec.sat_delta * Qx * mag ** 2 / (1.0 + spec.sat_P * mag ** 2)
    return sat[..., None] * E


def validate_assumption(spec: NonlinearitySpec, grid: Grid, sample_count: int,
                        rng) -> AssumptionReport:
    """Monte-Carlo check of the declared growth/Lipschitz inequalities;
    reports the worst observed ratios and where they occurred."""
    Qdecl = spec.weight_on(grid)
    flat = Qdecl.ravel()
    pos = np.flatnonzero(flat > 1e-14 * np.max(flat))
    idx = rng.choice(pos, size=min(sample_count, len(pos)), replace=True)
    m = len(idx)
    Qx = flat[idx]
    Qraw = spec.Q.evaluate(grid).ravel()[idx]
    if spec.form == "zero":
        return AssumptionReport(spec.class_tag, 0.0, 0.0, (), ())
    if spec.class_tag == "A":
        z1 = rng.uniform(-1, 1, size=m)
        z2 = rng.uniform(-1, 1, size=m)
        f1 = _pointwise_scalar(spec, Qraw, z1)
        f2 = _pointwise_scalar(spec, Qraw, z2)
        g = np.abs(f1) / np.maximum(Qx * np.abs(z1) ** (spec.p - 1), 1e-300)
        den = Qx * (np.abs(z1) + np.abs(z2)) ** (spec.p - 2) * np.abs(z1 - z2)
        lip = np.abs(f1 - f2) / np.maximum(den, 1e-300)
        return AssumptionReport(spec.class_tag, float(np.max(g)), float(np.max(lip)),
                                (float(z1[np.argmax(g)]),),
                                (float(z1[np.argmax(lip)]), float(z2[np.argmax(lip)])))
    if spec.class_tag == "A'":
        scale = rng.uniform(0, 1, (m, 2))
        dirs = rng.standard_normal((2, m, 3))
        dirs /= np.maximum(np.linalg.norm(dirs, axis=2), 1e-12)[:, :, None]
        E1 = scale[:, :1] * dirs[0]
        E2 = scale[:, 1:] * dirs[1]
        f1 = _pointwise_vector(spec, Qraw, E1)
        f2 = _pointwise_vector(spec, Qraw, E2)
        m1, m2 = scale[:, 0], scale[:, 1]
        g = np.linalg.norm(f1, axis=1) / np.maximum(Qx * m1 ** (spec.p - 1), 1e-300)
        den = Qx * (m1 + m2) ** (spec.p - 2) * np.linalg.norm(E1 - E2, axis=1)
        lip = np.linalg.norm(f1 - f2, axis=1) / np.maximum(den, 1e-300)
        return AssumptionReport(spec.class_tag, float(np.max(g)), float(np.max(lip)),
                                (float(m1[np.argmax(g)]),),
                                (float(m1[np.argmax(lip)]), float(m2[np.argmax(lip)])))
    E1 = rng.standard_normal((m, 3)) * rng.lognormal(0, 1, (m, 1))
    E2 = rng.standard_normal((m, 3)) * rng.lognormal(0, 1, (m, 1))
    f1 = _pointwise_vector(spec, Qraw, E1)
    f2 = _pointwise_vector(spec, Qraw, E2)
    m1 = np.linalg.norm(E1, axis=1)
    m2 = np.linalg.norm(E2, axis=1)
    g = np.linalg.norm(f1, axis=1) / np.maximum(
        Qx * m1 ** (spec.p - 1) * (1 + m1) ** (spec.p_tilde - spec.p), 1e-300)
    den = (Qx * (m1 + m2) ** (spec.p - 2)
           * (1 + m1 + m2) ** (spec.p_tilde - spec.p)
           * np.linalg.norm(E1 - E2, axis=1))
    lip = np.linalg.norm(f1 - f2, axis=1) / np.maximum(den, 1e-300)
    return AssumptionReport(spec.class_tag, float(np.max(g)), float(np.max(lip)),
                            (float(m1[np.argmax(g)]),),
                            (float(m1[np.argmax(lip)]), float(m2[np.argmax(lip)])))
