"""Parameter planning for the constructions.

Given the design goals (d defectives, h inhibitors, complex size r, error
separation x, and t pools) plus tuning constants (eps, delta, sigma, and an
optional high-probability exponent s), this module derives every quantity
the constructions need: the entry probability p, the two per-pair success
probabilities q1 and q2, the thresholds z and y, the feasibility constant c0,
the rate constant c, and the column budget n.

The column budget blows up exponentially in t, so it is computed in extended
precision (mpmath, log domain) and then pinned by direct evaluation of the
defining condition at n and n+1. An explicit mode bypasses the derived budget
for desk-scale experiments where the asymptotic n would be tiny.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import InputError, InternalConsistencyError

LN2 = math.log(2.0)

THEOREM = "theorem"
THEOREM_HP = "theorem-hp"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class DesignSpec:
    """Problem parameters plus tuning constants.

    Constraints: 0 < eps < 1, 0 < delta < 2**eps - 1, sigma > 0, and s (when
    given) > 0. Defaults sit near the middle of the admissible ranges.
    """

    d: int
    h: int
    r: int
    t: int
    x: int
    eps: float = 0.5
    delta: float = 0.25
    sigma: float = 1.0
    s: float | None = None

    def __post_init__(self):
        if self.d < 1 or self.h < 0 or self.r < 1 or self.t < 1 or self.x < 1:
            raise InputError("need d >= 1, h >= 0, r >= 1, t >= 1, x >= 1")
        if not 0.0 < self.eps < 1.0:
            raise InputError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0.0 < self.delta < 2.0**self.eps - 1.0:
            raise InputError(
                f"delta must lie in (0, 2**eps - 1) = (0, {2.0 ** self.eps - 1.0}), got {self.delta}"
            )
        if self.sigma <= 0.0:
            raise InputError(f"sigma must be positive, got {self.sigma}")
        if self.s is not None and self.s <= 0.0:
            raise InputError(f"s must be positive when given, got {self.s}")


@dataclass(frozen=True)
class ConstructionPlan:
    """Everything a construction run needs, in one frozen bundle.

    m is the pre-deletion column count; n the guaranteed survivor count the
    run must beat. sigma_n is the violated-set budget kept exact (the success
    test compares an integer count against it).
    """

    mode: str
    d: int
    h: int
    D: int
    r: int
    t: int
    x: int
    p: float
    q1: float
    q2: float
    z: int
    y: int
    n: int
    m: int
    sigma: float
    sigma_n: Fraction
    c0: float | None = None
    c: float | None = None
    eps: float | None = None
    delta: float | None = None
    s: float | None = None

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InputError(f"p must lie in (0, 1), got {self.p}")
        if self.z < 1 or self.y < 0:
            raise InputError("need z >= 1 and y >= 0")
        if self.z - self.y < self.x:
            raise InputError(f"z - y = {self.z - self.y} is below x = {self.x}")
        if not self.m > self.n >= 1:
            raise InputError(f"need m > n >= 1, got m={self.m}, n={self.n}")
        if self.D + self.r > self.m:
            raise InputError(f"D + r = {self.D + self.r} exceeds m = {self.m}")

    @property
    def pair_count(self) -> int:
        return math.comb(self.m, self.r) * math.comb(self.m - self.r, self.D)

    def header_params(self):
        from .io import DesignParams

        return DesignParams(d=self.d, h=self.h, r=self.r, x=self.x, z=self.z, y=self.y)

    def as_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "d": self.d,
            "h": self.h,
            "D": self.D,
            "r": self.r,
            "t": self.t,
            "x": self.x,
            "p": self.p,
            "q1": self.q1,
            "q2": self.q2,
            "z": self.z,
            "y": self.y,
            "n": self.n,
            "m": self.m,
            "sigma": self.sigma,
        }
        for key in ("c0", "c", "eps", "delta", "s"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out


def _mp_params(eps, delta, D, r):
    """High-precision p, q1, q2 from the defining formulas."""
    eps = mpmath.mpf(eps)
    delta = mpmath.mpf(delta)
    p = 1 - mpmath.power(2, -(1 - eps) / D)
    q1 = p**r * (1 - p) ** D
    q2 = p**r * (1 - (1 - p) ** D)
    return p, q1, q2


def _log_condition_lhs(D, r, t, q2, delta, sigma, s, n):
    """Natural log of the success-condition left side at column budget n."""
    delta = mpmath.mpf(delta)
    sigma = mpmath.mpf(sigma)
    val = (
        mpmath.log(2)
        + (D + r) * mpmath.log(1 + sigma)
        - mpmath.log(sigma)
        + (D + r - 1) * mpmath.log(n)
        - delta**2 * q2 * t / (2 + delta)
    )
    if s is not None:
        val += mpmath.mpf(s) * mpmath.log(t)
    return val


def condition_log_lhs(plan: ConstructionPlan, n: int) -> float:
    """Log of the plan's feasibility condition at a hypothetical budget n.

    Negative or zero means n satisfies the condition. Only meaningful for
    theorem-mode plans.
    """
    if plan.mode == EXPLICIT:
        raise InputError("explicit plans carry no feasibility condition")
    with mpmath.workdps(60):
        _, _, q2 = _mp_params(plan.eps, plan.delta, plan.D, plan.r)
        return float(_log_condition_lhs(plan.D, plan.r, plan.t, q2, plan.delta, plan.sigma, plan.s, n))


def _solve_budget(D, r, t, q2, delta, sigma, s):
    """Largest n with condition(n) <= 1, or 0 when even n = 1 fails."""
    sigma_mp = mpmath.mpf(sigma)
    delta_mp = mpmath.mpf(delta)
    log_n = (
        mpmath.log(sigma_mp)
        - mpmath.log(2)
        - (D + r) * mpmath.log(1 + sigma_mp)
        + delta_mp**2 * q2 * t / (2 + delta_mp)
        - (mpmath.mpf(s) * mpmath.log(t) if s is not None else 0)
    ) / (D + r - 1)
    n = int(mpmath.floor(mpmath.e**log_n))
    # Pin the floor by direct evaluation; the exponential is huge and the
    # condition must hold at n and fail at n+1.
    while n >= 1 and _log_condition_lhs(D, r, t, q2, delta, sigma, s, n) > 0:
        n -= 1
    while _log_condition_lhs(D, r, t, q2, delta, sigma, s, n + 1) <= 0:
        n += 1
    return n


def _exact_ceil(value_float: float, scale: int) -> int:
    """ceil(value * scale) with the float read as the exact rational it is."""
    prod = Fraction(value_float) * scale
    return -((-prod.numerator) // prod.denominator)


def plan_parameters(spec: DesignSpec) -> ConstructionPlan:
    """Derive a full construction plan from a design spec.

    Raises InputError when x exceeds the admissible ceiling (c0 / D**r) * t
    or when the derived column budget falls below 1 (the asymptotic budget is
    tiny at small t; use explicit mode there).
    """
    D = max(spec.d, spec.h)
    r, t = spec.r, spec.t
    c0 = (((1.0 - spec.eps) * LN2) / 2.0) ** r * (2.0**spec.eps - 1.0 - spec.delta)
    x_cap = c0 * t / D**r
    if spec.x > x_cap:
        raise InputError(
            f"x = {spec.x} exceeds the admissible ceiling; this spec supports x <= {math.floor(x_cap)}"
        )
    c = (
        spec.delta**2
        * (1.0 - spec.eps) ** r
        * LN2 ** (r - 1)
        * (1.0 - 2.0 ** (spec.eps - 1.0))
        / (2.0**r * (2.0 + spec.delta) * r)
    )
    # Overshoot the working precision past log10(n) so the floor is honest.
    p_est = 1.0 - 2.0 ** (-(1.0 - spec.eps) / D)
    q2_est = p_est**r * (1.0 - (1.0 - p_est) ** D)
    log10_n_est = (spec.delta**2 * q2_est * t / (2.0 + spec.delta)) / (
        (D + r - 1) * math.log(10)
    )
    with mpmath.workdps(60 + max(0, int(log10_n_est))):
        p_mp, q1_mp, q2_mp = _mp_params(spec.eps, spec.delta, D, r)
        z = int(mpmath.floor((1 - mpmath.mpf(spec.delta)) * q1_mp * t)) + 1
        y = int(mpmath.ceil((1 + mpmath.mpf(spec.delta)) * q2_mp * t)) - 1
        n = _solve_budget(D, r, t, q2_mp, spec.delta, spec.sigma, spec.s)
    if n < 1:
        raise InputError(
            "derived column budget is below 1 at this scale; build an explicit plan instead"
        )
    if z - y < spec.x:
        raise InternalConsistencyError(
            f"threshold gap z - y = {z - y} fell below x = {spec.x} despite the x ceiling"
        )
    sigma_n = Fraction(spec.sigma) * n
    m = n + _exact_ceil(spec.sigma, n)
    return ConstructionPlan(
        mode=THEOREM_HP if spec.s is not None else THEOREM,
        d=spec.d,
        h=spec.h,
        D=D,
        r=r,
        t=t,
        x=spec.x,
        p=float(p_mp),
        q1=float(q1_mp),
        q2=float(q2_mp),
        z=z,
        y=y,
        n=n,
        m=m,
        sigma=spec.sigma,
        sigma_n=sigma_n,
        c0=c0,
        c=c,
        eps=spec.eps,
        delta=spec.delta,
        s=spec.s,
    )


def make_explicit_plan(D, r, t, m, n, z, y, x, p, sigma=None) -> ConstructionPlan:
    """Desk-scale plan with caller-chosen thresholds and column counts.

    The violated-set budget defaults to the column slack m - n, which keeps
    the success guarantee "more than n columns survive". Passing sigma
    decouples the budget from the slack for runs where the pessimistic
    estimator starts above it.
    """
    if D < 1 or r < 1 or t < 1:
        raise InputError("need D >= 1, r >= 1, t >= 1")
    if x < 1:
        raise InputError("need x >= 1")
    q1 = p**r * (1.0 - p) ** D
    q2 = p**r * (1.0 - (1.0 - p) ** D)
    if sigma is None:
        sigma_n = Fraction(m - n)
        sigma_val = float(m - n) / n
    else:
        if sigma <= 0:
            raise InputError("sigma must be positive")
        sigma_n = Fraction(sigma) * n
        sigma_val = float(sigma)
    return ConstructionPlan(
        mode=EXPLICIT,
        d=D,
        h=D,
        D=D,
        r=r,
        t=t,
        x=x,
        p=p,
        q1=q1,
        q2=q2,
        z=z,
        y=y,
        n=n,
        m=m,
        sigma=sigma_val,
        sigma_n=sigma_n,
    )


def rate_lower_bound(plan: ConstructionPlan) -> float:
    """Finite-t rate bound for theorem-mode plans (reporting only)."""
    if plan.mode == EXPLICIT:
        raise InputError("rate_lower_bound applies to theorem-mode plans only")
    head = (
        math.log2(plan.sigma) - 1.0 - (plan.D + plan.r) * math.log2(1.0 + plan.sigma)
    ) / ((plan.D + plan.r - 1) * plan.t)
    tail = plan.delta**2 * plan.q2 / ((2.0 + plan.delta) * (plan.D + plan.r - 1) * LN2)
    return head + tail
