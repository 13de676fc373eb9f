"""Concrete circle-map families.

Three families are provided:

* ``RigidRotation`` -- x + omega, the reference integrable case.
* ``SineFamily`` -- lift x + omega - sin(2 pi m x)/(2 pi m), which has m
  cubic critical points at k/m.
* ``PiecewiseCanonical`` -- exact power law f(c) + lam*(x-c)|x-c|^(s-1)
  on a window around each critical point, bridged by monotone quintic
  interpolants matching value and first two derivatives.

All maps are immutable after construction and evaluate at a configurable
binary precision (default 256 bits).  Orbits are memoized per base point
behind a lock, so maps can be shared across threads.
"""

from __future__ import annotations

import bisect as _bisect
import configparser
import threading
from dataclasses import dataclass

from mpmath import mp, mpf

from .errors import (
    AtCriticalPoint,
    NonMonotoneJoin,
    NotBracketed,
    NotConverged,
    PrecisionExhausted,
    WindowsOverlap,
)
from .geometry import frac
from .rotation import (
    DEFAULT_PREC,
    ContinuedFraction,
    compare_with_target,
    expand,
    golden_mean,
    noble_value,
    periodic_value,
)

MIN_JOIN_SLOPE = mpf("1e-9")


@dataclass(frozen=True)
class CriticalPoint:
    """A power-law critical point with its window and derivative bounds.

    On the window, alpha*|x-c|^(s-1) < f'(x) < beta*|x-c|^(s-1); the
    bounds carry a small pad so the inequalities are strict.
    """

    position: mpf
    exponent: mpf
    window: mpf  # half-width
    alpha: mpf
    beta: mpf


class CircleMap:
    """Base class: a degree-one monotone lift plus critical-point data."""

    kind = "abstract"

    def __init__(self, omega, precision_bits: int = DEFAULT_PREC):
        self.precision_bits = int(precision_bits)
        with mp.workprec(self.precision_bits):
            self.omega = mpf(omega)
        self._orbit_cache: dict = {}
        self._orbit_lock = threading.Lock()

    # -- family-specific ---------------------------------------------------
    def lift(self, x):
        raise NotImplementedError

    def deriv(self, x, order: int = 1):
        raise NotImplementedError

    @property
    def critical_points(self) -> tuple[CriticalPoint, ...]:
        return ()

    def with_omega(self, omega) -> "CircleMap":
        raise NotImplementedError

    # -- generic -----------------------------------------------------------
    def __call__(self, x):
        with mp.workprec(self.precision_bits):
            return frac(self.lift(x))

    def schwarzian(self, x):
        """Sf = f'''/f' - (3/2)(f''/f')^2."""
        with mp.workprec(self.precision_bits):
            x = mpf(x)
            d1 = self.deriv(x, 1)
            if d1 <= 0:
                raise AtCriticalPoint(f"zero derivative at {mp.nstr(x, 20)}")
            r = self.deriv(x, 2) / d1
            return self.deriv(x, 3) / d1 - 3 * r * r / 2

    def window_index(self, x) -> int | None:
        """Index of the critical window containing x, if any."""
        with mp.workprec(self.precision_bits):
            x = mpf(x)
            for i, c in enumerate(self.critical_points):
                d = frac(x - c.position)
                d = d if d <= mpf("0.5") else d - 1
                if abs(d) <= c.window:
                    return i
        return None

    def orbit(self, x0, n: int) -> list:
        """Points f^0(x0)..f^n(x0); memoized and extended in place."""
        with mp.workprec(self.precision_bits):
            x0 = mpf(x0)
        with self._orbit_lock:
            pts = self._orbit_cache.setdefault(x0, [x0])
            with mp.workprec(self.precision_bits):
                while len(pts) <= n:
                    pts.append(frac(self.lift(pts[-1])))
            return pts[: n + 1]

    def backward(self, y):
        """The unique x with f(x) = y, by monotone bisection on the lift,
        run to 1.5x the working resolution."""
        prec = self.precision_bits
        with mp.workprec(prec):
            y = frac(mpf(y))
            lo, hi = mpf(0), mpf(1)
            f0 = self.lift(lo)
            t = f0 + frac(y - frac(f0))
            for _ in range(int(prec * 1.5) + 8):
                mid = (lo + hi) / 2
                if self.lift(mid) < t:
                    lo = mid
                else:
                    hi = mid
            return frac((lo + hi) / 2)

    def backward_orbit(self, x, n: int) -> list:
        """Points f^0(x), f^-1(x), ..., f^-n(x)."""
        pts = [mpf(x)]
        for _ in range(n):
            pts.append(self.backward(pts[-1]))
        return pts

    def nearest_critical(self, x):
        """(distance, CriticalPoint) minimizing circle distance, or None."""
        best = None
        with mp.workprec(self.precision_bits):
            for c in self.critical_points:
                d = frac(mpf(x) - c.position)
                d = d if d <= mpf("0.5") else 1 - d
                if best is None or d < best[0]:
                    best = (d, c)
        return best


def iterate_orbit(circle_map: CircleMap, x0, n: int, track_error: bool = False):
    """f^0(x0)..f^n(x0).  With ``track_error`` a first-order error bound
    is propagated through |f'| and the orbit is rejected once fewer than
    8 significant bits remain on the circle scale."""
    if not track_error:
        return circle_map.orbit(x0, n)
    prec = circle_map.precision_bits
    with mp.workprec(prec):
        err = mpf(2) ** (1 - prec)
        floor_err = mpf(2) ** (-8)
        pts = [frac(mpf(x0))]
        for _ in range(n):
            d = abs(circle_map.deriv(pts[-1], 1))
            err = err * max(d, mpf(1)) + mpf(2) ** (1 - prec)
            if err > floor_err:
                raise PrecisionExhausted(
                    f"error bound {mp.nstr(err, 5)} after {len(pts)} steps")
            pts.append(frac(circle_map.lift(pts[-1])))
        return pts


class RigidRotation(CircleMap):
    kind = "rotation"

    def lift(self, x):
        with mp.workprec(self.precision_bits):
            return mpf(x) + self.omega

    def deriv(self, x, order: int = 1):
        return mpf(1) if order == 1 else mpf(0)

    def schwarzian(self, x):
        return mpf(0)

    def with_omega(self, omega):
        return RigidRotation(omega, self.precision_bits)

    def backward(self, y):
        with mp.workprec(self.precision_bits):
            return frac(mpf(y) - self.omega)


class SineFamily(CircleMap):
    """m cubic critical points at k/m; shift part -sin(2 pi m x)/(2 pi m)."""

    kind = "sine"

    def __init__(self, m: int, omega, precision_bits: int = DEFAULT_PREC):
        if m < 1:
            raise ValueError("m must be >= 1")
        super().__init__(omega, precision_bits)
        self.m = int(m)
        with mp.workprec(self.precision_bits):
            self._tp = 2 * mp.pi * m
            w = min(mpf("0.05"), mpf(1) / (2 * m))
            pad = mpf("1e-9")
            alpha = 2 * mp.sin(mp.pi * m * w) ** 2 / w**2 * (1 - pad)
            beta = 2 * (mp.pi * m) ** 2 * (1 + pad)
            self._criticals = tuple(
                CriticalPoint(position=mpf(k) / m, exponent=mpf(3),
                              window=w, alpha=alpha, beta=beta)
                for k in range(m)
            )

    @property
    def critical_points(self):
        return self._criticals

    def with_omega(self, omega):
        return SineFamily(self.m, omega, self.precision_bits)

    def lift(self, x):
        with mp.workprec(self.precision_bits):
            x = mpf(x)
            return x + self.omega - mp.sin(self._tp * x) / self._tp

    def deriv(self, x, order: int = 1):
        with mp.workprec(self.precision_bits):
            x = mpf(x)
            if order == 1:
                return 1 - mp.cos(self._tp * x)
            if order == 2:
                return self._tp * mp.sin(self._tp * x)
            if order == 3:
                return self._tp**2 * mp.cos(self._tp * x)
        raise ValueError("order must be 1, 2 or 3")


class _Window:
    """Canonical power-law piece; values are unwrapped lift values."""

    def __init__(self, center_value, s, w, lam):
        self.cv, self.s, self.w, self.lam = center_value, s, w, lam

    def value(self, u):  # u = signed offset from the critical point
        if u == 0:
            return self.cv
        return self.cv + self.lam * mp.sign(u) * abs(u) ** self.s

    def deriv(self, u, order):
        s, lam = self.s, self.lam
        if order == 1:
            return lam * s * abs(u) ** (s - 1)
        if order == 2:
            return lam * s * (s - 1) * mp.sign(u) * abs(u) ** (s - 2)
        if order == 3:
            return lam * s * (s - 1) * (s - 2) * abs(u) ** (s - 3)
        raise ValueError("order must be 1, 2 or 3")

    def schwarzian(self, u):
        if u == 0:
            raise AtCriticalPoint("Schwarzian is singular at the critical point")
        return -(self.s**2 - 1) / (2 * u * u)


class _Quintic:
    """Quintic Hermite join on [0, L], matching value/D1/D2 at both ends."""

    def __init__(self, L, va, d1a, d2a, vb, d1b, d2b):
        self.L = L
        c0, c1, c2 = va, d1a, d2a / 2
        r0 = vb - (c0 + c1 * L + c2 * L**2)
        r1 = d1b - (c1 + 2 * c2 * L)
        r2 = d2b - 2 * c2
        A = mp.matrix([
            [L**3, L**4, L**5],
            [3 * L**2, 4 * L**3, 5 * L**4],
            [6 * L, 12 * L**2, 20 * L**3],
        ])
        sol = mp.lu_solve(A, mp.matrix([r0, r1, r2]))
        self.coeffs = (c0, c1, c2, sol[0], sol[1], sol[2])

    def value(self, t):
        c = self.coeffs
        return c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))))

    def deriv(self, t, order):
        c = self.coeffs
        if order == 1:
            return c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])))
        if order == 2:
            return 2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]))
        if order == 3:
            return 6 * c[3] + t * (24 * c[4] + t * 60 * c[5])
        raise ValueError("order must be 1, 2 or 3")

    def schwarzian(self, t):
        d1 = self.deriv(t, 1)
        r = self.deriv(t, 2) / d1
        return self.deriv(t, 3) / d1 - 3 * r * r / 2

    def min_slope(self, samples: int = 512):
        lo = None
        for i in range(samples + 1):
            v = self.deriv(self.L * mpf(i) / samples, 1)
            if lo is None or v < lo:
                lo = v
        return lo


@dataclass(frozen=True)
class CanonicalSpec:
    """One critical point of a PiecewiseCanonical map.

    Values may be given as strings to avoid binary-float contamination.
    """

    position: float | str
    exponent: float | str
    window: float | str
    slope: float | str = 1.0


class PiecewiseCanonical(CircleMap):
    """Exactly canonical near each critical point, quintic joins between.

    The base homeomorphism fixes every critical point; omega then shifts
    the whole lift, so tuning omega never moves the critical points.
    Joins match derivatives up to order two, making the map C^2 at the
    junctions and smooth elsewhere; the Schwarzian is available in closed
    form on every piece.
    """

    kind = "piecewise"

    def __init__(self, specs, omega, precision_bits: int = DEFAULT_PREC):
        super().__init__(omega, precision_bits)
        if not specs:
            raise ValueError("need at least one critical point")
        self.specs = tuple(specs)
        with mp.workprec(self.precision_bits + 16):
            entries = sorted(
                ((frac(mpf(str(sp.position))), mpf(str(sp.exponent)),
                  mpf(str(sp.window)), mpf(str(sp.slope))) for sp in specs),
                key=lambda e: e[0],
            )
            for c, s, w, lam in entries:
                if s <= 1 or w <= 0 or lam <= 0:
                    raise ValueError("need s > 1, w > 0, lam > 0")
                if 2 * w >= 1:
                    raise WindowsOverlap("window covers the whole circle")
            n = len(entries)
            origin = frac(entries[0][0] - entries[0][2])
            # Pieces over tau in [0,1), tau = frac(x - origin); values are
            # unwrapped lift values of the base map anchored at B(c_0)=c_0.
            pieces = []   # (tau_start, tau_len, handler)
            criticals = []
            pad = mpf("1e-9")
            for i, (c, s, w, lam) in enumerate(entries):
                cnxt = entries[(i + 1) % n][0] + (1 if i == n - 1 else 0)
                snxt, wnxt, lamnxt = entries[(i + 1) % n][1:4]
                if c + w >= cnxt - wnxt:
                    raise WindowsOverlap(
                        f"windows at {mp.nstr(c, 10)} and {mp.nstr(frac(cnxt), 10)} intersect")
                cu = entries[0][2] + (c - entries[0][0])  # c unwrapped from origin
                win = _Window(origin + cu, s, w, lam)
                tau0 = cu - w
                pieces.append((tau0, 2 * w, win))
                # rising quintic join to the left edge of the next window
                gap = (cnxt - wnxt) - (c + w)
                va = win.value(w)
                vb = origin + entries[0][2] + (cnxt - entries[0][0]) - lamnxt * wnxt**snxt
                if vb <= va:
                    raise NonMonotoneJoin("no room for a rising join between windows")
                nxtwin = _Window(mpf(0), snxt, wnxt, lamnxt)
                join = _Quintic(gap, va, win.deriv(w, 1), win.deriv(w, 2),
                                vb, nxtwin.deriv(-wnxt, 1), nxtwin.deriv(-wnxt, 2))
                if join.min_slope() < MIN_JOIN_SLOPE:
                    raise NonMonotoneJoin(
                        f"join after window {i} dips below slope {MIN_JOIN_SLOPE}")
                pieces.append((cu + w, gap, join))
                criticals.append(CriticalPoint(
                    position=c, exponent=s, window=w,
                    alpha=lam * s * (1 - pad), beta=lam * s * (1 + pad)))
            self._origin = origin
            self._pieces = pieces
            self._starts = [p[0] for p in pieces]
            self._criticals = tuple(criticals)

    @property
    def critical_points(self):
        return self._criticals

    def with_omega(self, omega):
        clone = object.__new__(PiecewiseCanonical)
        CircleMap.__init__(clone, omega, self.precision_bits)
        for name in ("specs", "_origin", "_pieces", "_starts", "_criticals"):
            setattr(clone, name, getattr(self, name))
        return clone

    def _locate(self, tau):
        i = _bisect.bisect_right(self._starts, tau) - 1
        if i < 0:
            i = len(self._pieces) - 1
        return self._pieces[i]

    def lift(self, x):
        with mp.workprec(self.precision_bits):
            x = mpf(x)
            d = x - self._origin
            k = mp.floor(d)
            tau = d - k
            tau0, ln, h = self._locate(tau)
            if isinstance(h, _Window):
                v = h.value((tau - tau0) - ln / 2)
            else:
                v = h.value(tau - tau0)
            return v + k + self.omega

    def deriv(self, x, order: int = 1):
        with mp.workprec(self.precision_bits):
            tau = frac(mpf(x) - self._origin)
            tau0, ln, h = self._locate(tau)
            if isinstance(h, _Window):
                return h.deriv((tau - tau0) - ln / 2, order)
            return h.deriv(tau - tau0, order)

    def schwarzian(self, x):
        with mp.workprec(self.precision_bits):
            tau = frac(mpf(x) - self._origin)
            tau0, ln, h = self._locate(tau)
            if isinstance(h, _Window):
                return h.schwarzian((tau - tau0) - ln / 2)
            return h.schwarzian(tau - tau0)


def build_sine_family(m: int, omega, precision_bits: int = DEFAULT_PREC) -> SineFamily:
    return SineFamily(m, omega, precision_bits)


def build_piecewise_canonical(specs, omega,
                              precision_bits: int = DEFAULT_PREC) -> PiecewiseCanonical:
    return PiecewiseCanonical(specs, omega, precision_bits)


# ---------------------------------------------------------------------------
# rotation-number tuning


@dataclass(frozen=True)
class TuneResult:
    map: CircleMap
    omega: mpf
    depth: int            # convergent depth at which map and target agree
    certified_width: mpf  # width of the Farey interval containing both
    target: ContinuedFraction


def _target_cf(target, prec: int, max_orbit: int, cap: int = 10**4) -> ContinuedFraction:
    if isinstance(target, ContinuedFraction):
        cf = target
    else:
        # expand adaptively; RationalDetected propagates to the caller
        depth = 8
        cf = None
        while True:
            cf = expand(target, depth, cap=cap, prec=prec)
            if cf.q(cf.depth) > max_orbit or depth > 256:
                break
            depth += 8
        if cf is None:
            raise NotConverged("could not expand target rotation number")
    # trim to the deepest convergent whose return time fits the budget
    d = cf.depth
    while d > 1 and cf.q(d) > max_orbit:
        d -= 1
    return ContinuedFraction(cf.quotients[:d])


def tune_omega(template: CircleMap, target, tol=mpf("1e-30"),
               max_orbit: int = 10**5, omega_bracket=(0, 1),
               x0=mpf("0.5")) -> TuneResult:
    """Bisection on omega until the map realizes the target rotation number.

    The comparison oracle walks the target's convergents p_n/q_n: the sign
    of F^{q_n}(x) - x - p_n decides rho(map) vs p_n/q_n exactly (the map
    has no periodic orbits at the candidate omegas that matter), so a
    candidate is accepted when it agrees with the target on every
    convergent with q_n <= max_orbit.  The result then lies in the same
    Farey interval as the target, of width 1/(q_d q_{d-1}); that width is
    the honest tolerance certificate.  ``tol`` trims the walk early when
    already satisfied.
    """
    prec = template.precision_bits
    cf = _target_cf(target, prec, max_orbit)
    with mp.workprec(prec):
        # trim depth further once the Farey certificate is below tol
        d = 1
        while d < cf.depth:
            width_d = mpf(1) / (mpf(cf.q(d)) * (cf.q(d) + cf.q(d - 1)))
            if width_d <= tol:
                break
            d += 1
        cf = ContinuedFraction(cf.quotients[:d])
        lo, hi = mpf(omega_bracket[0]), mpf(omega_bracket[1])
        side_lo, _ = compare_with_target(template.with_omega(lo), cf, max_orbit, x0)
        side_hi, _ = compare_with_target(template.with_omega(hi), cf, max_orbit, x0)
        if side_lo > 0 or side_hi < 0:
            raise NotBracketed("target rotation number not bracketed in omega")
        if side_lo == 0:
            return _finish_tune(template, lo, cf, prec)
        if side_hi == 0:
            return _finish_tune(template, hi, cf, prec)
        for _ in range(prec + 64):
            mid = (lo + hi) / 2
            if mid == lo or mid == hi:
                break
            side, _depth = compare_with_target(template.with_omega(mid), cf, max_orbit, x0)
            if side == 0:
                return _finish_tune(template, mid, cf, prec)
            if side < 0:
                lo = mid
            else:
                hi = mid
        raise NotConverged(
            "omega bisection exhausted the working precision before the "
            "candidate matched the target on all convergents")


def _finish_tune(template, omega, cf, prec):
    # agreement on all convergents to depth d pins both numbers inside the
    # Farey interval (p_d/q_d, (p_d+p_{d-1})/(q_d+q_{d-1}))
    d = cf.depth
    with mp.workprec(prec):
        width = mpf(1) / (mpf(cf.q(d)) * (cf.q(d) + cf.q(d - 1)))
    return TuneResult(map=template.with_omega(omega), omega=omega,
                      depth=d, certified_width=width, target=cf)


# ---------------------------------------------------------------------------
# power-law diagnostics


@dataclass(frozen=True)
class CriticalFit:
    position: mpf
    declared_exponent: mpf
    fitted_exponent: mpf   # slope of log f' vs log|x-c| plus one
    alpha_hat: mpf
    beta_hat: mpf
    gamma_hat: mpf


@dataclass(frozen=True)
class PowerLawReport:
    fits: tuple[CriticalFit, ...]
    offwindow_logdf_variation: mpf


def power_law_diagnostics(circle_map: CircleMap, samples: int = 24,
                          off_samples: int = 1024) -> PowerLawReport:
    """Empirical power-law constants per critical point.

    Fits the slope of log f' against log|x-c| on a geometric grid inside
    each window, reports the sampled alpha/beta envelope for the declared
    exponent, the worst-pair gamma constant, and the sampled variation of
    log f' off the windows.
    """
    prec = circle_map.precision_bits
    fits = []
    with mp.workprec(prec):
        for c in circle_map.critical_points:
            us, d1s = [], []
            for side in (1, -1):
                for j in range(samples):
                    u = c.window * mpf(2) ** (-j * mpf(10) / samples)
                    us.append(u)
                    d1s.append(circle_map.deriv(frac(c.position + side * u), 1))
            logs_u = [mp.log(u) for u in us]
            logs_d = [mp.log(d) for d in d1s]
            k = len(us)
            mx = sum(logs_u) / k
            my = sum(logs_d) / k
            sxx = sum((a - mx) ** 2 for a in logs_u)
            sxy = sum((a - mx) * (b - my) for a, b in zip(logs_u, logs_d))
            slope = sxy / sxx
            s = c.exponent
            ratios = [d / u ** (s - 1) for u, d in zip(us, d1s)]
            alpha_hat, beta_hat = min(ratios), max(ratios)
            fc = circle_map(c.position)
            gam = mpf(0)
            pts = sorted(set(us))
            vals = {}
            for u in pts:
                vals[u] = frac(circle_map(frac(c.position + u)) - fc)
            for i, ua in enumerate(pts):
                for ub in pts[i:]:
                    if ua > ub:
                        continue
                    r = vals[ua] / vals[ub]
                    g = r / (ua / ub) ** s
                    gam = max(gam, g)
            fits.append(CriticalFit(
                position=c.position, declared_exponent=s,
                fitted_exponent=slope + 1, alpha_hat=alpha_hat,
                beta_hat=beta_hat, gamma_hat=gam))
        # total variation of log f' sampled off the windows
        var = mpf(0)
        prev = None
        for i in range(off_samples):
            x = mpf(i) / off_samples
            if circle_map.window_index(x) is not None:
                prev = None
                continue
            v = mp.log(circle_map.deriv(x, 1))
            if prev is not None:
                var += abs(v - prev)
            prev = v
    return PowerLawReport(fits=tuple(fits), offwindow_logdf_variation=var)


# ---------------------------------------------------------------------------
# map-specification files (plain key=value with sections)


def parse_rho_spec(text: str, prec: int = DEFAULT_PREC):
    """Rotation-number target syntax.

    * ``golden``           -- the inverse golden ratio [1,1,1,...]
    * ``cf:1,1,1,40``      -- quotient prefix continued by an all-ones tail
    * ``cfper:2,2`` / ``cfper:1,1,1,40``
                           -- purely periodic quotients
    * ``cfper:2,4/8``      -- prefix 2,4 then periodic tail 8
    * any other string     -- a decimal literal parsed at working precision
    """
    text = text.strip()
    if text == "golden":
        return golden_mean(prec)
    if text.startswith("cf:"):
        prefix = tuple(int(t) for t in text[3:].split(",") if t.strip())
        return noble_value(prefix, prec)
    if text.startswith("cfper:"):
        body = text[6:]
        if "/" in body:
            pre, per = body.split("/", 1)
            prefix = tuple(int(t) for t in pre.split(",") if t.strip())
            period = tuple(int(t) for t in per.split(",") if t.strip())
        else:
            prefix = ()
            period = tuple(int(t) for t in body.split(",") if t.strip())
        return periodic_value(period, prefix, prec)
    with mp.workprec(prec):
        return mpf(text)


def load_map_config(path) -> CircleMap:
    """Build (and optionally tune) a map from a plain-text config file.

    Sections: ``[family]`` with ``kind`` in {sine, piecewise, rotation},
    ``m``/``omega``/``precision_bits``; ``[critical.K]`` blocks with
    ``position``, ``exponent``, ``window``, ``slope`` for the piecewise
    family; optional ``[tuning]`` with ``target_rho``, ``tol``,
    ``max_orbit``.
    """
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    fam = cp["family"]
    kind = fam.get("kind", "sine").strip()
    prec = fam.getint("precision_bits", DEFAULT_PREC)
    omega = fam.get("omega", "0").strip()
    if kind == "rotation":
        template = RigidRotation(parse_rho_spec(omega, prec) if omega != "0" else 0, prec)
    elif kind == "sine":
        template = SineFamily(fam.getint("m", 1), mpf(omega), prec)
    elif kind == "piecewise":
        specs = []
        for name in sorted(s for s in cp.sections() if s.startswith("critical.")):
            sec = cp[name]
            specs.append(CanonicalSpec(
                position=sec.get("position"), exponent=sec.get("exponent"),
                window=sec.get("window"), slope=sec.get("slope", "1.0")))
        template = PiecewiseCanonical(specs, mpf(omega), prec)
    else:
        raise ValueError(f"unknown family kind {kind!r}")
    if cp.has_section("tuning"):
        tn = cp["tuning"]
        target = parse_rho_spec(tn.get("target_rho", "golden"), prec)
        tol = mpf(tn.get("tol", "1e-30"))
        max_orbit = tn.getint("max_orbit", 10**5)
        return tune_omega(template, target, tol=tol, max_orbit=max_orbit).map
    return template
