"""Executable exponent calculus over the extended reals.

Every admissibility window and exponent set the solver relies on, with the
plus-convention: 1/r_+ means 1/r for r > 0 and +infinity for r <= 0.
Formulas are written in 1/s form so s = inf evaluates exactly.
"""

import math
from dataclasses import dataclass, field

__all__ = [
    "Interval", "p_threshold", "p_threshold_radial", "xi_set", "xi_rad_set",
    "lap_window", "lap_window_radial", "fourth_order_window", "t_star",
    "admissible_t_interval", "choose_q", "bootstrap_schedule",
    "ExponentReport", "build_report", "InfeasibleExponents",
]

INF = math.inf


class InfeasibleExponents(ValueError):
    """Raised when a requested exponent configuration has no solution."""


def div_plus(num: float, den: float) -> float:
    """num / den_+ : +inf when den <= 0 (num assumed positive)."""
    if den <= 0:
        return INF
    return num / den


def _inv(s: float) -> float:
    return 0.0 if math.isinf(s) else 1.0 / s


@dataclass(frozen=True)
class Interval:
    """Open interval (lo, hi); hi may be +inf."""

    lo: float
    hi: float

    @property
    def is_empty(self) -> bool:
        return not (self.lo < self.hi)

    def __contains__(self, q) -> bool:
        return self.lo < q < self.hi

    def midpoint(self) -> float:
        if self.is_empty:
            raise InfeasibleExponents(f"empty interval ({self.lo}, {self.hi})")
        if math.isinf(self.hi):
            return 2.0 * self.lo
        return 0.5 * (self.lo + self.hi)


def p_threshold(n: int, s: float) -> float:
    """Least superlinear growth exponent admitting the fixed-point window:
    p > max{2, (2s(n^2+2n-1) - 2n(n+1)) / ((n^2-1)s)}."""
    val = (2 * (n * n + 2 * n - 1) - 2 * n * (n + 1) * _inv(s)) / (n * n - 1)
    return max(2.0, val)


def p_threshold_radial(n: int, s: float) -> float:
    """Radial improvement: p > max{2, (s(2n^2+n-1) - 2n^2) / (s n (n-1))}."""
    val = ((2 * n * n + n - 1) - 2 * n * n * _inv(s)) / (n * (n - 1))
    return max(2.0, val)


def xi_set(n: int, s: float, p: float) -> Interval:
    """Admissible fixed-point exponents q: the open interval
    (2n/(n-1), 2n/(n-3)_+) intersected with
    q < min{ s(n+1)(p-2)/(2s-(n+1))_+ , 2ns(p-1)/(s(n+1)-2n)_+ }."""
    lo = 2 * n / (n - 1)
    hi = div_plus(2 * n, n - 3)
    b1 = div_plus((n + 1) * (p - 2), 2 - (n + 1) * _inv(s))
    b2 = div_plus(2 * n * (p - 1), (n + 1) - 2 * n * _inv(s))
    return Interval(lo, min(hi, b1, b2))


def xi_rad_set(n: int, s: float, p: float) -> Interval:
    """Radial variant: q < min{ 2n^2 s(p-2)/((3n-1)s - 2n^2)_+ ,
    2ns(p-1)/(s(n+1)-2n)_+ } on the same base interval."""
    lo = 2 * n / (n - 1)
    hi = div_plus(2 * n, n - 3)
    b1 = div_plus(2 * n * n * (p - 2), (3 * n - 1) - 2 * n * n * _inv(s))
    b2 = div_plus(2 * n * (p - 1), (n + 1) - 2 * n * _inv(s))
    return Interval(lo, min(hi, b1, b2))


def lap_window(n: int, t: float, q: float) -> bool:
    """Limiting-absorption boundedness window L^t -> L^q:
    1/t > (n+1)/2n, 1/q < (n-1)/2n, 2/(n+1) <= 1/t - 1/q <= 2/n
    (strict upper bound for n = 2)."""
    if not (1 < t and 1 < q):
        return False
    it, iq = 1 / t, 1 / q
    if not (it > (n + 1) / (2 * n) and iq < (n - 1) / (2 * n)):
        return False
    d = it - iq
    if n == 2:
        return 2 / (n + 1) <= d < 2 / n
    return 2 / (n + 1) <= d <= 2 / n


def lap_window_radial(n: int, t: float, q: float) -> bool:
    """Radial window: the lower constraint 2/(n+1) is replaced by the strict
    (3n-1)/(2n^2) < 1/t - 1/q."""
    if not (1 < t and 1 < q):
        return False
    it, iq = 1 / t, 1 / q
    if not (it > (n + 1) / (2 * n) and iq < (n - 1) / (2 * n)):
        return False
    d = it - iq
    if n == 2:
        return (3 * n - 1) / (2 * n * n) < d < 2 / n
    return (3 * n - 1) / (2 * n * n) < d <= 2 / n


def fourth_order_window(n: int, t: float, q: float) -> bool:
    """Fourth-order operator window: upper bound on 1/t - 1/q relaxed to
    4/n (n>=5), < 1 (n=4), <= 1 (n=2,3)."""
    if not (1 < t and 1 < q):
        return False
    it, iq = 1 / t, 1 / q
    if not (it > (n + 1) / (2 * n) and iq < (n - 1) / (2 * n)):
        return False
    d = it - iq
    if d < 2 / (n + 1):
        return False
    if n >= 5:
        return d <= 4 / n
    if n == 4:
        return d < 1
    return d <= 1


def t_star(q: float, s_tilde: float, p: float) -> float:
    """Least integrability exponent of the truncated nonlinearity:
    max{1, s~ q/(s~(p-1) + q)}."""
    return max(1.0, q / ((p - 1) + q * _inv(s_tilde)))


def admissible_t_interval(n: int, q: float, s: float, p: float,
                          radial: bool = False, fourth: bool = False):
    """t-window for mapping f(.,chi(u)) in L^t back into L^q:
    [max(nq/(n+2q), t*(q,s)), min((n+1)q/(n+1+2q), 2n/(n+1)))."""
    if radial:
        lo_pair = 2 * n * n * q / (2 * n * n + (3 * n - 1) * q)
    else:
        lo_pair = n * q / (n + 2 * q) if not fourth else n * q / (n + 4 * q)
    lo = max(lo_pair, t_star(q, s, p), 1.0)
    hi = min((n + 1) * q / (n + 1 + 2 * q), 2 * n / (n + 1))
    return lo, hi


def choose_q(interval: Interval) -> float:
    """Default exponent: midpoint (2x lower end when unbounded above)."""
    return interval.midpoint()


# --------------------------------------------------------------- schedules

_MARGIN = 1e-9


def _window_for(problem: str, n: int):
    if problem in ("nlh", "curlcurl-cyl"):
        return lambda t, q: lap_window(n, t, q)
    if problem == "nlh-radial":
        return lambda t, q: lap_window_radial(n, t, q)
    if problem == "fourth-order":
        return lambda t, q: fourth_order_window(n, t, q)
    if problem == "curlcurl-general":
        return lambda t, q: lap_window(3, t, q)
    raise ValueError(f"unknown problem tag {problem!r}")


def _pick_t(t_bounds, q_next, lower_const, upper_const, label):
    """Midpoint t of the integrability bounds intersected with the window
    determined by q_next: lower_const <= 1/t - 1/q~ <= upper_const."""
    lo = max(t_bounds[0], 1.0 / (upper_const + 1.0 / q_next) * (1 + _MARGIN))
    hi = min(t_bounds[1], 1.0 / (lower_const + 1.0 / q_next) * (1 - _MARGIN))
    if not lo < hi:
        raise InfeasibleExponents(
            f"empty t-interval for {label} at q~={q_next:.6g} "
            f"(t in [{lo:.6g}, {hi:.6g}])")
    return 0.5 * (lo + hi)


def _nlh_step_down(n, s, p, q, r, radial):
    """One downward step: the most aggressive admissible q~ (clamped at the
    target r), then t in the interior of its feasible window."""
    lower_const = (3 * n - 1) / (2 * n * n) if radial else 2 / (n + 1)
    upper_const = 2 / n
    t_lo = max(1.0, t_star(q, s, p)) * (1 + _MARGIN)
    t_hi = (2 * n / (n + 1)) * (1 - _MARGIN)
    if not t_lo < t_hi:
        raise InfeasibleExponents("t*(q,s) leaves no admissible t below 2n/(n+1)")
    forced = div_plus(t_lo, 1 - lower_const * t_lo)
    q_next = max(r, forced * (1 + _MARGIN), (2 * n / (n - 1)) * (1 + _MARGIN))
    t = _pick_t((t_lo, t_hi), q_next, lower_const, upper_const, "downward step")
    return t, q_next


def _nlh_step_up(n, s, p, q0, q, r):
    """Upward step using u in L^{q0} cap L^inf: t free in [t*(q0,s), 2n/(n+1))."""
    lower_const = 2 / (n + 1)
    upper_const = 2 / n
    t_lo = max(1.0 * (1 + _MARGIN), t_star(q0, s, p))
    t_hi = (2 * n / (n + 1)) * (1 - _MARGIN)
    reach = div_plus(t_hi, 1 - upper_const * t_hi)
    q_next = min(r, reach * (1 - _MARGIN))
    t = _pick_t((t_lo, t_hi), q_next, lower_const, upper_const, "upward step")
    return t, q_next


def _curlcurl_down_step(s, p, p_tilde, q, r):
    """Downward curl-curl step with the explicit midpoint t_q."""
    lo = max(1.0, 3 * r / (3 + 2 * r), q / (q * _inv(s) + (p - 1)))
    hi = min(1.5, 2 * q / (q + 2), div_plus(q, p_tilde - 1))
    if not lo < hi:
        raise InfeasibleExponents(
            f"empty curl-curl t-interval at q={q:.6g}, r={r:.6g} "
            f"(lo={lo:.6g} >= hi={hi:.6g})")
    t = 0.5 * (lo + hi)
    q_next = max(r, 2 * t / (2 - t) * (1 + _MARGIN))
    return t, q_next


def _curlcurl_up_step(s, p, p_tilde, q, r):
    """Upward curl-curl step (p~ < 2 < p) with its midpoint t_q."""
    lo = max(1.0, 3 * q / (3 + 2 * q), q / (q * _inv(s) + (p - 1)))
    hi = min(1.5, 2 * q / (q + 2 * (p_tilde - 1)), div_plus(q, p_tilde - 1))
    if not lo < hi:
        raise InfeasibleExponents(
            f"empty upward curl-curl t-interval at q={q:.6g} (lo={lo:.6g} >= hi={hi:.6g})")
    t = 0.5 * (lo + hi)
    q_next = min(3 * t / (3 - 2 * t) * (1 - _MARGIN), div_plus(q, p_tilde - 1), r)
    if q_next == r:
        # final step: re-center t inside the window determined by r exactly
        t = _pick_t((lo * (1 + _MARGIN), hi * (1 - _MARGIN)), r, 0.5, 2 / 3,
                    "final upward curl-curl step")
    return t, q_next


def bootstrap_schedule(problem: str, n: int, s: float, p: float,
                       p_tilde: float | None, q_start: float,
                       r_target: float, max_steps: int = 64):
    """Finite schedule of (t, q~) pairs carrying L^{q_start} regularity to
    L^{r_target}; every pair satisfies its governing window (re-checked)."""
    if r_target == q_start:
        return []
    window = _window_for(problem, n)
    pairs = []
    q = q_start
    if problem.startswith("curlcurl") and r_target < q_start:
        for _ in range(max_steps):
            t, q_next = _curlcurl_down_step(s, p, p_tilde if p_tilde is not None else 2.0,
                                            q, r_target)
            pairs.append((t, q_next))
            if not window(t, q_next):
                raise InfeasibleExponents(
                    f"schedule pair (t={t:.6g}, q~={q_next:.6g}) violates the window")
            q = q_next
            if abs(q - r_target) < 1e-12 or q <= r_target:
                return pairs
        raise InfeasibleExponents("schedule did not terminate (downward curl-curl)")
    if problem.startswith("curlcurl"):
        if not (p_tilde is not None and p_tilde < 2 < p):
            raise InfeasibleExponents("upward curl-curl schedule needs p~ < 2 < p")
        cap = div_plus(3 * (p - 1), 2 - 3 * _inv(s))
        if not r_target < cap:
            raise InfeasibleExponents(
                f"r={r_target:.6g} outside the reachable range (cap {cap:.6g})")
        for _ in range(max_steps):
            t, q_next = _curlcurl_up_step(s, p, p_tilde, q, r_target)
            pairs.append((t, q_next))
            if not window(t, q_next):
                raise InfeasibleExponents(
                    f"schedule pair (t={t:.6g}, q~={q_next:.6g}) violates the window")
            if q_next <= q + 1e-12 and q_next < r_target:
                raise InfeasibleExponents("upward curl-curl schedule stalled")
            q = q_next
            if q >= r_target - 1e-12:
                return pairs
        raise InfeasibleExponents("schedule did not terminate (upward curl-curl)")
    radial = problem == "nlh-radial"
    if r_target < q_start:
        for _ in range(max_steps):
            t, q_next = _nlh_step_down(n, s, p, q, r_target, radial)
            pairs.append((t, q_next))
            if not window(t, q_next):
                raise InfeasibleExponents(
                    f"schedule pair (t={t:.6g}, q~={q_next:.6g}) violates the window")
            if q_next >= q - 1e-12 and q_next > r_target:
                raise InfeasibleExponents("downward schedule stalled")
            q = q_next
            if q <= r_target + 1e-12:
                return pairs
        raise InfeasibleExponents("schedule did not terminate (downward)")
    for _ in range(max_steps):
        t, q_next = _nlh_step_up(n, s, p, q_start, q, r_target)
        pairs.append((t, q_next))
        if not window(t, q_next):
            raise InfeasibleExponents(
                f"schedule pair (t={t:.6g}, q~={q_next:.6g}) violates the window")
        if q_next <= q + 1e-12 and q_next < r_target:
            raise InfeasibleExponents("upward schedule stalled")
        q = q_next
        if q >= r_target - 1e-12:
            return pairs
    raise InfeasibleExponents("schedule did not terminate (upward)")


# ------------------------------------------------------------------ report

@dataclass
class ExponentReport:
    problem: str
    n: int
    s: float
    p: float
    p_tilde: float | None
    interval: Interval
    chosen_q: float | None
    t_window: tuple | None
    schedule: list = field(default_factory=list)
    nonempty: bool = False

    def to_dict(self):
        def num(x):
            if x is None:
                return None
            return "inf" if math.isinf(x) else x

        return {
            "problem": self.problem,
            "n": self.n,
            "s": num(self.s),
            "p": self.p,
            "p_tilde": self.p_tilde,
            "q_interval": [num(self.interval.lo), num(self.interval.hi)],
            "nonempty": self.nonempty,
            "chosen_q": num(self.chosen_q),
            "t_window": None if self.t_window is None else
                        [num(self.t_window[0]), num(self.t_window[1])],
            "schedule": [[t, q] for (t, q) in self.schedule],
        }


def build_report(problem: str, n: int, s: float, p: float,
                 p_tilde: float | None = None, q: float | str = "auto",
                 r_target: float | None = None) -> ExponentReport:
    """Assemble the full exponent certificate for one problem instance."""
    if problem == "curlcurl-general":
        if n != 3:
            raise InfeasibleExponents("curl-curl problems live in n=3")
        hi = div_plus(3.0, 2 - 3 * _inv(s))
        interval = Interval(3.0, hi)
    elif problem == "nlh-radial":
        interval = xi_rad_set(n, s, p)
    else:
        interval = xi_set(n, s, p)
    report = ExponentReport(problem, n, s, p, p_tilde, interval, None, None,
                            nonempty=not interval.is_empty)
    if interval.is_empty:
        return report
    chosen = choose_q(interval) if q == "auto" else float(q)
    if chosen not in interval:
        raise InfeasibleExponents(
            f"q={chosen:.6g} outside the admissible interval "
            f"({interval.lo:.6g}, {interval.hi:.6g})")
    report.chosen_q = chosen
    if problem != "curlcurl-general":
        report.t_window = admissible_t_interval(
            n, chosen, s, p, radial=problem == "nlh-radial",
            fourth=problem == "fourth-order")
    if r_target is not None:
        report.schedule = bootstrap_schedule(problem, n, s, p, p_tilde,
                                             chosen, r_target)
    return report
