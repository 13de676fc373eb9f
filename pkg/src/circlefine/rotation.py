"""Continued fractions, return times, and rotation-number estimation.

Conventions: rotation numbers live in (0, 1) and are written as
rho = [a_0, a_1, ...] = 1/(a_0 + 1/(a_1 + ...)) with all a_n >= 1.
Return times follow q_0 = 1, q_1 = a_0, q_{n+1} = a_n q_n + q_{n-1};
they are the denominators of the convergents p_n/q_n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mp, mpf

from .errors import NotConverged, RationalDetected

DEFAULT_PREC = 256

#: Partial quotients larger than this are treated as precision exhaustion.
QUOTIENT_CAP = 10**4


@dataclass(frozen=True)
class ContinuedFraction:
    """A finite prefix a_0..a_{d-1} of a continued-fraction expansion."""

    quotients: tuple[int, ...]
    _q: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _p: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.quotients:
            raise ValueError("need at least one partial quotient")
        if any(a < 1 for a in self.quotients):
            raise ValueError("partial quotients must be >= 1")
        # q_0 = 1, q_1 = a_0, q_{n+1} = a_n q_n + q_{n-1}; p likewise with
        # p_0 = 0, p_1 = 1.
        q = [1, self.quotients[0]]
        p = [0, 1]
        for n in range(1, len(self.quotients)):
            q.append(self.quotients[n] * q[n] + q[n - 1])
            p.append(self.quotients[n] * p[n] + p[n - 1])
        object.__setattr__(self, "_q", tuple(q))
        object.__setattr__(self, "_p", tuple(p))

    @property
    def depth(self) -> int:
        return len(self.quotients)

    @property
    def return_times(self) -> tuple[int, ...]:
        """q_0 .. q_{d-1}, aligned with the stored quotients."""
        return self._q[: self.depth]

    @property
    def convergent_numerators(self) -> tuple[int, ...]:
        return self._p[: self.depth]

    def a(self, n: int) -> int:
        return self.quotients[n]

    def q(self, n: int) -> int:
        """Return time q_n; valid for 0 <= n <= depth."""
        return self._q[n]

    def p(self, n: int) -> int:
        return self._p[n]

    def convergent(self, n: int) -> Fraction:
        return Fraction(self._p[n], self._q[n])

    def value(self, prec: int = DEFAULT_PREC) -> mpf:
        """The deepest convergent p_d/q_d as a float."""
        with mp.workprec(prec):
            return mpf(self._p[-1]) / self._q[-1]

    def signed_error(self, n: int, rho) -> mpf:
        """q_n*rho - p_n; its sign alternates, its magnitude is ||q_n rho||."""
        return self._q[n] * rho - self._p[n]

    def prefix_matches(self, other: "ContinuedFraction", depth: int) -> bool:
        return self.quotients[:depth] == other.quotients[:depth]


def expand(rho, depth: int, cap: int = QUOTIENT_CAP,
           prec: int = DEFAULT_PREC) -> ContinuedFraction:
    """Partial quotients of rho in (0,1) via the Gauss map.

    Raises RationalDetected when the remainder underflows the accumulated
    rounding error (the input is rational, or the precision too low to
    tell), or when a partial quotient exceeds ``cap``.
    """
    with mp.workprec(prec):
        r = mpf(rho)
        if not 0 < r < 1:
            r = r - mp.floor(r)
        if r == 0:
            raise RationalDetected("integer input")
        quotients = []
        qprev, qcur = 0, 1  # q_{n-1}, q_n of the expansion built so far
        ulp = mpf(2) ** (4 - prec)
        for _ in range(depth):
            # Error in the remainder grows like q_n^2 * ulp.
            if r <= (mpf(qcur) ** 2) * ulp:
                raise RationalDetected(
                    f"remainder underflow after {len(quotients)} quotients")
            inv = 1 / r
            a = int(mp.floor(inv))
            if a > cap:
                raise RationalDetected(
                    f"partial quotient {a} exceeds cap {cap}")
            quotients.append(a)
            r = inv - a
            qprev, qcur = qcur, a * qcur + qprev
        return ContinuedFraction(tuple(quotients))


def cf_value(prefix, tail, prec: int = DEFAULT_PREC) -> mpf:
    """Value of [prefix..., tail] where tail in (0,1) is the remainder."""
    with mp.workprec(prec):
        v = mpf(tail)
        if not 0 < v < 1:
            raise ValueError("tail must lie in (0,1)")
        for a in reversed(tuple(prefix)):
            v = 1 / (a + v)
        return v


def golden_mean(prec: int = DEFAULT_PREC) -> mpf:
    """(sqrt(5)-1)/2 = [1,1,1,...]."""
    with mp.workprec(prec):
        return (mp.sqrt(5) - 1) / 2


def noble_value(prefix, prec: int = DEFAULT_PREC) -> mpf:
    """Value of the given quotient prefix continued by an all-ones tail."""
    return cf_value(prefix, golden_mean(prec + 8), prec=prec)


def periodic_value(period, prefix=(), prec: int = DEFAULT_PREC) -> mpf:
    """Quadratic irrational with eventually periodic quotients.

    ``period`` repeats forever after ``prefix``.  The periodic tail t
    solves the Moebius fixed-point equation given by the period, so the
    result is exact to working precision.
    """
    period = tuple(period)
    if not period or any(a < 1 for a in period):
        raise ValueError("period must be a nonempty sequence of ints >= 1")
    # Composition matrix of v -> 1/(a+v) over one period, leftmost first.
    al, be, ga, de = 1, 0, 0, 1
    for a in period:
        # multiply by [[0,1],[1,a]] on the right
        al, be, ga, de = be, al + be * a, de, ga + de * a
    with mp.workprec(prec + 16):
        disc = (mpf(de) - al) ** 2 + 4 * mpf(be) * ga
        t = ((al - de) + mp.sqrt(disc)) / (2 * ga)
    return cf_value(tuple(prefix), t, prec=prec)


@dataclass(frozen=True)
class RotationEstimate:
    """Result of estimating a rotation number from orbit data."""

    value: mpf
    quotients: tuple[int, ...]
    width: mpf          # width of the certifying Farey interval
    iterates_used: int
    birkhoff: mpf       # plain orbit-average cross-check

    def __float__(self):
        return float(self.value)


class _LiftOrbit:
    """Streams cumulative lift displacements F^k(x0) - x0 of a circle map."""

    def __init__(self, circle_map, x0):
        self.map = circle_map
        self.prec = circle_map.precision_bits
        with mp.workprec(self.prec):
            self.x = mpf(x0)
        self.disp = [mpf(0)]

    def displacement(self, k: int) -> mpf:
        with mp.workprec(self.prec):
            while len(self.disp) <= k:
                y = self.map.lift(self.x)
                self.disp.append(self.disp[-1] + (y - self.x))
                self.x = y - mp.floor(y)
            return self.disp[k]


def _runs_to_quotients(moves) -> tuple[int, ...]:
    """Decode a Stern-Brocot L/R move sequence into partial quotients.

    The path of x = [a_0, a_1, ...] is L^(a_0 - 1) R^(a_1) L^(a_2) ...
    The final (possibly truncated) run is dropped.
    """
    runs = []
    if not moves:
        return ()
    cur, count = moves[0], 1
    for m in moves[1:]:
        if m == cur:
            count += 1
        else:
            runs.append((cur, count))
            cur, count = m, 1
    runs.append((cur, count))
    if runs[0][0] == "R":
        runs.insert(0, ("L", 0))
    runs = runs[:-1]  # last run may be incomplete
    return tuple(
        count + 1 if i == 0 else count for i, (_, count) in enumerate(runs)
    )


def rotation_number(circle_map, max_iterates: int = 10**5,
                    tol=mpf("1e-12"), x0=mpf("0.5")) -> RotationEstimate:
    """Estimate rho by mediant (Stern-Brocot) bisection on the lift.

    For a map without periodic orbits the sign of F^q(x) - x - p is
    independent of x, so a single orbit decides rho vs p/q exactly; the
    mediant walk then produces the partial quotients as run lengths.
    A plain Birkhoff average over the same orbit is kept as cross-check.

    Raises NotConverged if the certifying Farey interval is still wider
    than ``tol`` when ``max_iterates`` is reached.
    """
    prec = circle_map.precision_bits
    orbit = _LiftOrbit(circle_map, x0)
    pl, ql, pr, qr = 0, 1, 1, 1
    moves = []
    with mp.workprec(prec):
        guard = mpf(2) ** (32 - prec)
        while True:
            pm, qm = pl + pr, ql + qr
            if qm > max_iterates:
                break
            s = orbit.displacement(qm) - pm
            if abs(s) <= qm * guard:
                break  # below precision floor; cannot decide further
            if s > 0:
                pl, ql = pm, qm
                moves.append("R")
            else:
                pr, qr = pm, qm
                moves.append("L")
        width = mpf(1) / (mpf(ql) * qr)
        value = (mpf(pl) + pr) / (mpf(ql) + qr)
        used = max(ql, qr)
        birkhoff = orbit.displacement(used) / used
        if width > tol:
            raise NotConverged(
                f"Farey width {mp.nstr(width, 8)} > tol after {used} iterates")
        return RotationEstimate(
            value=value,
            quotients=_runs_to_quotients(moves),
            width=width,
            iterates_used=used,
            birkhoff=birkhoff,
        )


def compare_with_target(circle_map, target: ContinuedFraction,
                        max_orbit: int, x0=mpf("0.5")) -> tuple[int, int]:
    """Order rho(map) against the number described by ``target``.

    Walks the target's convergents p_n/q_n with q_n <= max_orbit and
    compares the side of rho(map) with the side of the target at each.
    Returns (cmp, depth): cmp is -1/+1 as soon as a convergent separates
    the two numbers, or 0 if they are indistinguishable, with depth the
    last convergent index tested.
    """
    orbit = _LiftOrbit(circle_map, x0)
    prec = circle_map.precision_bits
    depth = 0
    with mp.workprec(prec):
        for n in range(1, target.depth + 1):
            qn, pn = target.q(n), target.p(n)
            if qn > max_orbit:
                break
            s_map = orbit.displacement(qn) - pn
            # target side: sign of q_n rho* - p_n alternates, equal to
            # (-1)^n for our convention
            s_target = 1 if n % 2 == 0 else -1
            side = 1 if s_map > 0 else -1
            depth = n
            if side != s_target:
                return (side, depth)
        return (0, depth)
