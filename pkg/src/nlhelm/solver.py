"""Fixed-point maps T(., h) and the Picard iteration with diagnostics.

Scalar problems iterate u_{k+1} = F(h dsigma) + Re R(lam+i0) f(., chi(u_k));
the fourth-order variant swaps in the factored resolvent and (case (ii))
a second sphere; the curl-curl problems iterate the vector analogue, with
no truncation in the general class-(B) case.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import exponents as expo
from .fields import (Grid, ScalarField, VectorField3, boundary_mass_fraction,
                     lq_norm)
from .herglotz import HerglotzWave, pde_residual as herglotz_pde_residual, \
    synthesize_scalar, synthesize_vector
from .nonlinearity import NonlinearitySpec, Truncation, apply, apply_truncated
from .resolvent import (FourthOrderSpec, ResolventConfig, curlcurl_resolvent,
                        fourth_order_resolvent, helmholtz_resolvent_real)
from .sphere import SphereDensity, SphereQuadrature, build_quadrature, cm_norm_estimate

__all__ = [
    "FixedPointProblem", "SolveResult", "make_problem", "apply_T",
    "picard_solve", "continuity_in_h", "linear_prediction_lq",
    "pde_residual_report",
]

_PROBLEM_TAGS = ("nlh", "nlh-radial", "fourth-order", "curlcurl-cyl",
                 "curlcurl-general")


@dataclass
class FixedPointProblem:
    tag: str
    grid: Grid
    nonlinearity: NonlinearitySpec
    resolvent: ResolventConfig
    densities: list                      # one SphereDensity, two for case (ii)
    quads: list
    q: float
    truncation: Truncation = field(default_factory=Truncation)
    fourth_spec: FourthOrderSpec | None = None
    rho: float = 1.0
    tol: float = 1e-10
    max_iter: int = 50
    _herglotz_cache: object = None

    @property
    def lam(self) -> float:
        return self.resolvent.lam

    def herglotz_term(self):
        if self._herglotz_cache is None:
            if self.tag.startswith("curlcurl"):
                waves = [synthesize_vector(h, q, self.grid)
                         for h, q in zip(self.densities, self.quads)]
            else:
                waves = [synthesize_scalar(h, q, self.grid)
                         for h, q in zip(self.densities, self.quads)]
            total = waves[0].field
            for w in waves[1:]:
                total = total + w.field
            self._herglotz_cache = (total, waves)
        return self._herglotz_cache


def make_problem(tag, grid, densities, nonlinearity, lam=None, fourth_spec=None,
                 q="auto", quad_resolution=24, resolvent_cfg=None,
                 truncation=None, rho=1.0, tol=1e-10, max_iter=50):
    """Assemble a problem, certifying the exponent q through the calculus."""
    if tag not in _PROBLEM_TAGS:
        raise ValueError(f"unknown problem tag {tag!r}")
    if not isinstance(densities, (list, tuple)):
        densities = [densities]
    densities = list(densities)
    if tag == "fourth-order":
        if fourth_spec is None:
            raise ValueError("fourth-order problems need a FourthOrderSpec")
        lams = list(fourth_spec.roots) if fourth_spec.case == "ii" else [fourth_spec.lam]
        if len(densities) != len(lams):
            raise ValueError(f"case ({fourth_spec.case}) expects {len(lams)} densities")
        lam = fourth_spec.lam
    else:
        if lam is None:
            raise ValueError("lambda required")
        lams = [lam]
    spec = nonlinearity
    report = expo.build_report(
        "nlh" if tag == "fourth-order" else tag, grid.dim, spec.s, spec.p,
        spec.p_tilde if spec.class_tag == "B" else None, q=q)
    if not report.nonempty:
        raise expo.InfeasibleExponents(
            f"empty exponent set for (n={grid.dim}, s={spec.s}, p={spec.p})")
    quads = [build_quadrature(grid.dim, l, quad_resolution) for l in lams]
    if resolvent_cfg is None:
        # solver default: a near-bare lattice principal value.  The fixed
        # point then satisfies the discrete equation to multiplier algebra
        # (the nonlinear term it feeds is O(||h||^p-1), so solution-level
        # physics is unaffected); the eps-corrected scheme stays the default
        # for standalone resolvent evaluations.
        resolvent_cfg = ResolventConfig(lam=lam, epsilon=1e-6 * lam,
                                        eps_correction=False,
                                        quad_resolution=quad_resolution)
    return FixedPointProblem(
        tag=tag, grid=grid, nonlinearity=spec, resolvent=resolvent_cfg,
        densities=densities, quads=quads, q=report.chosen_q,
        truncation=truncation or Truncation(), fourth_spec=fourth_spec,
        rho=rho, tol=tol, max_iter=max_iter)


# ----------------------------------------------------------------- T(., h)

def _nonlinear_term(prob: FixedPointProblem, u):
    if prob.tag == "curlcurl-general":
        return apply(prob.nonlinearity, u)
    return apply_truncated(prob.nonlinearity, prob.truncation, u)


def apply_T(prob: FixedPointProblem, u):
    """One application of the fixed-point map."""
    hg, _ = prob.herglotz_term()
    fu = _nonlinear_term(prob, u)
    if prob.tag in ("nlh", "nlh-radial"):
        return hg + helmholtz_resolvent_real(fu, prob.resolvent)
    if prob.tag == "fourth-order":
        return hg + fourth_order_resolvent(fu, prob.fourth_spec, prob.resolvent)
    return hg + curlcurl_resolvent(fu, prob.resolvent)


# ------------------------------------------------------------------- Picard

@dataclass
class SolveResult:
    problem: FixedPointProblem
    solution: object
    update_norms: list
    ratios: list
    contraction_ratio: float
    fixed_point_residual: float
    linf: float
    truncation_active: bool
    boundary_mass: float
    ball_exceeded: bool
    converged: bool
    diverged: bool
    message: str = ""

    def to_dict(self):
        return {
            "tag": self.problem.tag,
            "q": self.problem.q,
            "update_norms": self.update_norms,
            "ratios": self.ratios,
            "contraction_ratio": self.contraction_ratio,
            "fixed_point_residual": self.fixed_point_residual,
            "linf": self.linf,
            "truncation_active": self.truncation_active,
            "boundary_mass": self.boundary_mass,
            "ball_exceeded": self.ball_exceeded,
            "converged": self.converged,
            "diverged": self.diverged,
            "message": self.message,
        }


def picard_solve(prob: FixedPointProblem) -> SolveResult:
    """Iterate u_{k+1} = T(u_k) from u_0 = 0 with contraction diagnostics."""
    zero = (VectorField3.zeros(prob.grid) if prob.tag.startswith("curlcurl")
            else ScalarField.zeros(prob.grid))
    u = zero
    diffs, ratios = [], []
    converged = diverged = False
    message = ""
    rising = 0
    for _ in range(prob.max_iter):
        u_next = apply_T(prob, u)
        d = lq_norm(u_next - u, prob.q)
        diffs.append(d)
        if len(diffs) >= 2 and diffs[-2] > 0:
            r = d / diffs[-2]
            ratios.append(r)
            rising = rising + 1 if r >= 1.0 else 0
            if rising >= 3:
                diverged = True
                message = ("no contraction for 3 consecutive iterations; "
                           "reduce the density C^m norm or the Q scale")
                u = u_next
                break
        u = u_next
        if d < prob.tol:
            converged = True
            break
    if not converged and not diverged:
        message = f"no convergence within {prob.max_iter} iterations"
    residual = lq_norm(apply_T(prob, u) - u, prob.q) if converged else np.inf
    linf = lq_norm(u, np.inf)
    contraction = float(np.median(ratios[-3:])) if ratios else 0.0
    truncation_active = (prob.tag != "curlcurl-general") and linf >= 0.5
    ball_exceeded = lq_norm(u, prob.q) > prob.rho
    if ball_exceeded:
        warnings.warn(f"iterate left the L^q ball of radius {prob.rho}", stacklevel=2)
    return SolveResult(
        problem=prob, solution=u, update_norms=diffs, ratios=ratios,
        contraction_ratio=contraction, fixed_point_residual=residual,
        linf=linf, truncation_active=truncation_active,
        boundary_mass=boundary_mass_fraction(u), ball_exceeded=ball_exceeded,
        converged=converged, diverged=diverged, message=message)


# ------------------------------------------------------------- diagnostics

def pde_residual_report(result: SolveResult) -> dict:
    """Two-part PDE residual of the converged solution.

    resolvent_part: spectral residual of the resolvent factor against the
    nonlinear right-hand side, measured away from the sphere's frequency
    shell (an exact lattice identity for the solver's near-bare principal
    value).  herglotz_part: interior finite-difference residual of the
    homogeneous term.  The solution solves the equation up to their max.
    """
    prob = result.problem
    if prob.resolvent.eps_correction:
        raise ValueError("the spectral residual report applies to the "
                         "solver's uncorrected lattice configuration")
    u = result.solution
    hg, waves = prob.herglotz_term()
    fu = _nonlinear_term(prob, u)
    w = u - hg
    g = prob.grid
    if prob.tag in ("nlh", "nlh-radial"):
        t = g.freq_radius_sq() - prob.lam
        op_w = np.fft.fftn(np.asarray(w.values, dtype=complex))
        fhat_all = np.fft.fftn(fu.values)
        resid_hat = t * op_w - fhat_all
        shells = [np.sqrt(prob.lam)]
    elif prob.tag == "fourth-order":
        k2 = g.freq_radius_sq()
        sym = k2 ** 2 + prob.fourth_spec.beta * k2 + prob.fourth_spec.alpha
        fhat_all = np.fft.fftn(fu.values)
        resid_hat = sym * np.fft.fftn(np.asarray(w.values, dtype=complex)) - fhat_all
        shells = [np.sqrt(l) for l in prob.fourth_spec.roots if l > 0]
    else:
        k1 = g.freq_axis()
        ks = np.meshgrid(*([k1] * 3), indexing="ij")
        k2 = ks[0] ** 2 + ks[1] ** 2 + ks[2] ** 2
        what = [np.fft.fftn(w.components[c]) for c in range(3)]
        fhat = [np.fft.fftn(fu.components[c]) for c in range(3)]
        dot = sum(ks[c] * what[c] for c in range(3))
        resid_hat = np.stack([k2 * what[c] - ks[c] * dot - prob.lam * what[c] - fhat[c]
                              for c in range(3)])
        fhat_all = np.stack(fhat)
        shells = [np.sqrt(prob.lam)]
    rho = np.sqrt(g.freq_radius_sq())
    mask = np.ones(g.shape, dtype=bool)
    for srad in shells:
        mask &= np.abs(rho - srad) > 2.0 * g.freq_spacing
    if resid_hat.ndim == g.dim + 1:
        num = np.linalg.norm(resid_hat[:, mask])
        den = np.linalg.norm(fhat_all[:, mask])
    else:
        num = np.linalg.norm(resid_hat[mask])
        den = np.linalg.norm(fhat_all[mask])
    resolvent_part = float(num / (den or 1.0))
    herglotz_part = max(herglotz_pde_residual(wv) for wv in waves)
    return {
        "resolvent_part": resolvent_part,
        "herglotz_part": herglotz_part,
        "total": max(resolvent_part, herglotz_part),
    }


def linear_prediction_lq(prob: FixedPointProblem, h1: SphereDensity,
                         h2: SphereDensity) -> float:
    """L^q norm of the synthesized difference wave F((h1-h2) dsigma)."""
    diff = h1 - h2
    if prob.tag.startswith("curlcurl"):
        wave = synthesize_vector(diff, prob.quads[0], prob.grid)
    else:
        wave = synthesize_scalar(diff, prob.quads[0], prob.grid)
    return lq_norm(wave.field, prob.q)


def continuity_in_h(prob: FixedPointProblem, h1: SphereDensity,
                    h2: SphereDensity, results=None):
    """||u_{h1} - u_{h2}||_q / ||h1 - h2||_{C^m}, the Step-3 continuity probe."""
    from dataclasses import replace as _replace
    if results is None:
        p1 = _replace(prob, densities=[h1] + prob.densities[1:], _herglotz_cache=None)
        p2 = _replace(prob, densities=[h2] + prob.densities[1:], _herglotz_cache=None)
        r1, r2 = picard_solve(p1), picard_solve(p2)
    else:
        r1, r2 = results
    if not (r1.converged and r2.converged):
        raise ValueError("continuity probe requires converged solves")
    dh = cm_norm_estimate(h1 - h2, h1.smoothness_order)
    du = lq_norm(r1.solution - r2.solution, prob.q)
    if dh == 0:
        return 0.0, True
    return du / dh, False
