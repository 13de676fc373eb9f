"""Conjugacies between circle maps, invariant measures, signatures, and
quasisymmetry estimation.

Two maps with the same irrational rotation number are conjugate; matching
chosen critical points c_0(f) and c_0(g) pins the conjugacy h on the
whole orbit: h(f^n(c_0(f))) = g^n(c_0(g)).  The table of those matched
orbit points, extended monotonically (piecewise linearly) between
breakpoints, is the numerical conjugacy.  Quasisymmetry is probed by the
symmetric-ratio table K(x,t) = |h(x+t)-h(x)| / |h(x)-h(x-t)|.

Invariant measures come from the semiconjugacy to the rigid rotation:
psi(f^k(c_0)) = k*rho mod 1, so the measure coordinate of a point is
pinned by bracketing it between orbit points, then sharpened by
intersecting the constraints carried back along its own forward orbit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np
from mpmath import mp, mpf

from .errors import (
    IncompatibleTopology,
    NoCriticalPoints,
    NotConverged,
    NotIsomorphic,
    OrderViolation,
    ScaleBelowResolution,
)
from .geometry import Arc, ccw_span, frac
from .maps import CircleMap


def stream_orbit(circle_map: CircleMap, x0, M: int) -> np.ndarray:
    """First M orbit points of x0 as float64, iterated at full precision."""
    out = np.empty(M, dtype=np.float64)
    with mp.workprec(circle_map.precision_bits):
        x = frac(mpf(x0))
        for i in range(M):
            v = float(x)
            out[i] = 0.0 if v >= 1.0 else v  # float64 can round up to 1
            if i + 1 < M:
                x = frac(circle_map.lift(x))
    return out


def rotation_coords(rho, M: int, prec: int = 256) -> np.ndarray:
    """{k*rho} for k < M as float64, accumulated at full precision."""
    out = np.empty(M, dtype=np.float64)
    with mp.workprec(prec):
        r = frac(mpf(rho))
        x = mpf(0)
        for i in range(M):
            out[i] = float(x)
            x += r
            if x >= 1:
                x -= 1
    return out


def _check_rotation_order(pts: np.ndarray, rot: np.ndarray, label: str):
    """Verify the circular order of pts is consistent with that of rot.

    Orbit points can collapse below float64 resolution near critical
    values (power-law compression), so the check demands that pts sorted
    by rotation coordinate is cyclically non-decreasing (at most one
    descent, the wrap); transpositions hidden inside float ties are
    unobservable and harmless.
    """
    xs = pts[np.argsort(rot)]
    d = np.diff(xs)
    descents = int((d < 0).sum()) + (1 if xs[0] < xs[-1] else 0)
    if descents > 1:
        bad = int(np.nonzero(d < 0)[0][0])
        raise OrderViolation(
            f"{label}: orbit order diverges from the rotation order "
            f"(first bad rotation rank {bad} of {len(pts)})")


def _base_critical(circle_map: CircleMap):
    if not circle_map.critical_points:
        raise NoCriticalPoints("map has no critical points")
    return circle_map.critical_points[0].position


# ---------------------------------------------------------------------------
# invariant measure


@dataclass
class MeasureFrame:
    """Sorted critical-orbit snapshot used for measure lookups.

    Sorted by the rotation coordinate, which is the true circular order;
    spatial positions can carry runs of float64-equal values where the
    map compresses near critical values, and brackets widen across such
    runs so the returned interval always contains the true coordinate.
    """

    xs: np.ndarray      # orbit points, ccw (non-decreasing, runs of ties)
    psi: np.ndarray     # their rotation coordinates, strictly ccw
    rho: float
    M: int

    def bracket(self, y: float):
        """(psi_left, gap): the measure coordinate of y lies in
        [psi_left, psi_left + gap] (mod 1); widened across ties."""
        M = self.M
        i = int(np.searchsorted(self.xs, y)) % M
        lo = (i - 1) % M
        steps = 0
        while steps < M and self.xs[lo] == self.xs[(lo - 1) % M]:
            lo = (lo - 1) % M
            steps += 1
        hi = i
        steps = 0
        while steps < M and self.xs[hi] == self.xs[(hi + 1) % M]:
            hi = (hi + 1) % M
            steps += 1
        plo = float(self.psi[lo])
        gap = float((self.psi[hi] - plo) % 1.0)
        return plo, gap


def _roll_ascending(xs: np.ndarray, others: list):
    """Roll circularly ordered arrays so xs is globally non-decreasing."""
    k = int(np.argmin(xs))
    n = len(xs)
    # back up over a tie run that may wrap across the array ends
    while xs[(k - 1) % n] == xs[k]:
        k = (k - 1) % n
        if k == int(np.argmin(xs)):
            break
    return np.roll(xs, -k), [np.roll(o, -k) for o in others]


def measure_frame(circle_map: CircleMap, rho, M: int) -> MeasureFrame:
    """Frame anchored at the first critical point: psi(c_0) = 0."""
    c0 = _base_critical(circle_map)
    pts = stream_orbit(circle_map, c0, M)
    rot = rotation_coords(rho, M, circle_map.precision_bits)
    _check_rotation_order(pts, rot, "measure frame")
    order = np.argsort(rot)
    xs, (psi,) = _roll_ascending(pts[order], [rot[order]])
    return MeasureFrame(xs=xs, psi=psi, rho=float(frac(mpf(rho))), M=M)


def measure_coordinate(circle_map: CircleMap, frame: MeasureFrame, x,
                       refine: int = 1024):
    """Certified (value, half_width) for psi(x) = mu[c_0, x].

    The initial bracket between orbit neighbours has width ~1/M; each
    forward iterate of x contributes the constraint
    psi(x) = psi(f^t x) - t*rho, and intersecting ``refine`` of them
    typically tightens the interval to ~1/(M * refine).
    """
    with mp.workprec(circle_map.precision_bits):
        y = frac(mpf(x))
        base, gap = frame.bracket(float(y))
        lo, hi = 0.0, gap            # psi(x) - base, on the line
        t_shift = 0.0
        for _t in range(1, refine + 1):
            y = frac(circle_map.lift(y))
            t_shift = (t_shift + frame.rho) % 1.0
            l2, gap2 = frame.bracket(float(y))
            rel = (l2 - t_shift - base) % 1.0
            if rel > 0.5:
                rel -= 1.0
            lo = max(lo, rel)
            hi = min(hi, rel + gap2)
            if hi < lo - 1e-12:
                raise OrderViolation(
                    "measure-coordinate constraints inconsistent; orbit "
                    "order unreliable at this resolution")
        mid = (base + (lo + hi) / 2) % 1.0
        return mid, max((hi - lo) / 2, 0.0)


def invariant_measure(circle_map: CircleMap, arc: Arc, samples: int,
                      tol=None, bases=("0.1", "0.57")):
    """Visit frequency of the arc along two independent orbits.

    Returns (value, error_estimate); raises NotConverged when the two
    estimates disagree beyond ``tol`` (when given).
    """
    freqs = []
    with mp.workprec(circle_map.precision_bits):
        left = arc.left
        ln = arc.length
        for b in bases:
            x = frac(mpf(b))
            hits = 0
            for _ in range(samples):
                if ccw_span(left, x) <= ln:
                    hits += 1
                x = frac(circle_map.lift(x))
            freqs.append(mpf(hits) / samples)
        value = (freqs[0] + freqs[1]) / 2
        err = abs(freqs[0] - freqs[1]) / 2 + mpf(2) / samples
    if tol is not None and err > tol:
        raise NotConverged(
            f"measure estimates disagree by {mp.nstr(err, 5)} > {tol}")
    return value, err


@dataclass(frozen=True)
class Signature:
    """(rho, N; exponents; invariant-measure gaps between critical points)."""

    rho: float
    n_critical: int
    exponents: tuple
    gaps: tuple           # lambda_i = mu[c_i, c_{i+1}), cyclic
    gap_errors: tuple

    def total(self):
        return sum(self.gaps)


def signature(circle_map: CircleMap, rho, M: int = 20000,
              refine: int = 1024) -> Signature:
    """Signature of the map; the measure gaps come from certified
    measure coordinates of the critical points."""
    cps = circle_map.critical_points
    if not cps:
        raise NoCriticalPoints("signature undefined without critical points")
    frame = measure_frame(circle_map, rho, M)
    # the frame is anchored at c_0, whose coordinate is 0 by definition
    coords = [0.0]
    errs = [0.0]
    for cp in cps[1:]:
        v, e = measure_coordinate(circle_map, frame, cp.position, refine)
        coords.append(v)
        errs.append(e)
    gaps = []
    gap_errs = []
    n = len(cps)
    for i in range(n):
        gaps.append((coords[(i + 1) % n] - coords[i]) % 1.0 if n > 1 else 1.0)
        gap_errs.append(errs[i] + errs[(i + 1) % n])
    return Signature(rho=float(frac(mpf(rho))), n_critical=n,
                     exponents=tuple(float(cp.exponent) for cp in cps),
                     gaps=tuple(gaps), gap_errors=tuple(gap_errs))


@dataclass(frozen=True)
class MatchReport:
    matched: bool
    deltas: tuple
    errors: tuple
    tol: float


def measure_match_check(f: CircleMap, g: CircleMap, rho, M: int = 20000,
                        refine: int = 1024, tol: float = 1e-6) -> MatchReport:
    """Gap-by-gap comparison of the two signatures.

    Raises IncompatibleTopology when the critical-point counts differ
    (rotation numbers are compared by the caller supplying one rho)."""
    if len(f.critical_points) != len(g.critical_points):
        raise IncompatibleTopology(
            f"critical counts differ: {len(f.critical_points)} vs "
            f"{len(g.critical_points)}")
    sf = signature(f, rho, M, refine)
    sg = signature(g, rho, M, refine)
    deltas = tuple(abs(a - b) for a, b in zip(sf.gaps, sg.gaps))
    errors = tuple(ef + eg for ef, eg in zip(sf.gap_errors, sg.gap_errors))
    matched = all(d <= max(tol, e) for d, e in zip(deltas, errors))
    return MatchReport(matched=matched, deltas=deltas, errors=errors, tol=tol)


# ---------------------------------------------------------------------------
# the conjugacy table


def conjugacy_resolution(xs_sorted: np.ndarray) -> float:
    """Smallest positive breakpoint gap (float64 can collapse breakpoints
    near critical values; collapsed runs act as one breakpoint)."""
    gaps = np.diff(xs_sorted)
    wrap = (xs_sorted[0] - xs_sorted[-1]) % 1.0
    pos = gaps[gaps > 0]
    cands = [pos.min()] if len(pos) else []
    if wrap > 0:
        cands.append(wrap)
    return float(min(cands))


@dataclass
class ConjugacyTable:
    """Monotone breakpoint table sorted by the source coordinate, with
    piecewise-linear interpolation in between."""

    xs: np.ndarray
    ys: np.ndarray
    M: int
    resolution: float

    def __call__(self, x: float) -> float:
        return self.h(x)

    def h(self, x: float) -> float:
        x = x % 1.0
        i = int(np.searchsorted(self.xs, x))
        x0, y0 = self.xs[i - 1], self.ys[i - 1]
        if i == len(self.xs):
            i = 0
        x1, y1 = self.xs[i], self.ys[i]
        dx = (x1 - x0) % 1.0
        dy = (y1 - y0) % 1.0
        t = ((x - x0) % 1.0) / dx if dx > 0 else 0.0
        return (y0 + t * dy) % 1.0

    def local_gap(self, x: float) -> float:
        i = int(np.searchsorted(self.xs, x % 1.0))
        return float((self.xs[i % len(self.xs)] - self.xs[i - 1]) % 1.0)

    def span(self, x_from: float, x_to: float) -> float:
        """ccw length of h([x_from, x_to])."""
        return (self.h(x_to) - self.h(x_from)) % 1.0


def build_conjugacy(f: CircleMap, g: CircleMap, M: int, rho) -> ConjugacyTable:
    """Conjugacy table from the matched critical orbits of f and g.

    Both orbits must realize the circular order of the rotation by rho;
    OrderViolation otherwise (M exceeded the certified resolution of one
    of the tunings, or the maps do not share the rotation number).
    """
    xs = stream_orbit(f, _base_critical(f), M)
    ys = stream_orbit(g, _base_critical(g), M)
    rot = rotation_coords(rho, M, max(f.precision_bits, g.precision_bits))
    _check_rotation_order(xs, rot, "source orbit")
    _check_rotation_order(ys, rot, "target orbit")
    order = np.argsort(rot)
    xs, (ys,) = _roll_ascending(xs[order], [ys[order]])
    return ConjugacyTable(xs=xs, ys=ys, M=M,
                          resolution=conjugacy_resolution(xs))


def identity_table(M: int = 4) -> ConjugacyTable:
    xs = np.arange(M, dtype=np.float64) / M
    return ConjugacyTable(xs=xs, ys=xs.copy(), M=M, resolution=1.0 / M)


def equivariance_error(table: ConjugacyTable, f: CircleMap, g: CircleMap,
                       n_samples: int = 64, seed: int = 0) -> float:
    """sup over samples of dist(h(f(x)), g(h(x))); zero on breakpoints by
    construction, interpolation-scale elsewhere."""
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(n_samples):
        x = rng.random()
        a = table.h(float(f(x)))
        b = float(g(table.h(x)))
        worst = max(worst, abs((a - b + 0.5) % 1.0 - 0.5))
    return worst


# ---------------------------------------------------------------------------
# quasisymmetry scans


@dataclass(frozen=True)
class QsSample:
    x: float
    t: float
    K: float            # max(ratio, 1/ratio)
    resolved: bool      # local breakpoint gaps below t/8 at all probes


@dataclass(frozen=True)
class QsScan:
    samples: tuple
    scales: tuple                 # distinct t values, descending
    max_by_scale: tuple           # max K over all samples at each scale
    max_resolved_by_scale: tuple  # max K over locally resolved samples
    resolved_counts: tuple


def qs_scan(table: ConjugacyTable, x_grid, t_scales) -> QsScan:
    """Symmetric-ratio table K(x,t) over a grid of points and scales.

    Every scale must clear 8x the table resolution (ScaleBelowResolution
    otherwise).  Each sample also records whether the three probe points
    are locally resolved (breakpoint gap <= t/8), so callers can separate
    trustworthy values from interpolation-dominated ones.
    """
    scales = sorted({float(t) for t in t_scales}, reverse=True)
    if min(scales) < 8 * table.resolution:
        raise ScaleBelowResolution(
            f"t = {min(scales):g} below 8x resolution "
            f"{table.resolution:g}")
    samples = []
    max_all, max_res, counts = [], [], []
    for t in scales:
        worst_all = 1.0
        worst_res = None
        nres = 0
        for x in x_grid:
            x = float(x) % 1.0
            up = table.span(x, x + t)
            dn = table.span(x - t, x)
            if up <= 0 or dn <= 0:
                continue
            r = up / dn
            K = max(r, 1 / r)
            resolved = all(table.local_gap(p) <= t / 8
                           for p in (x - t, x, x + t))
            samples.append(QsSample(x=x, t=t, K=K, resolved=resolved))
            worst_all = max(worst_all, K)
            if resolved:
                nres += 1
                worst_res = K if worst_res is None else max(worst_res, K)
        max_all.append(worst_all)
        max_res.append(worst_res if worst_res is not None else float("nan"))
        counts.append(nres)
    return QsScan(samples=tuple(samples), scales=tuple(scales),
                  max_by_scale=tuple(max_all),
                  max_resolved_by_scale=tuple(max_res),
                  resolved_counts=tuple(counts))


def qs_profile(table: ConjugacyTable, x: float, t_scales):
    """K(x, t) at one point across scales, with local resolution flags."""
    out = []
    for t in sorted({float(t) for t in t_scales}, reverse=True):
        up = table.span(x, x + t)
        dn = table.span(x - t, x)
        r = up / dn
        resolved = all(table.local_gap(p) <= t / 8 for p in (x - t, x, x + t))
        out.append(QsSample(x=x, t=t, K=max(r, 1 / r), resolved=resolved))
    return out


# ---------------------------------------------------------------------------
# the grid criterion


@dataclass(frozen=True)
class GridCriterionReport:
    lambda_observed: float
    a: int
    rho: float
    p: int
    base: float                  # lambda + rho
    n_terms: int                 # 2 a^(p+1), number of geometric terms
    log10_K: float               # log10 of the criterion constant
    levels_checked: int


def qs_constant(a: int, rho, lam, prec: int = 256):
    """(alpha, beta, rho1, p, n_terms, log10 K) of the quasisymmetry
    criterion constant K = sum_{nu=1}^{2 a^{p+1}} (lam+rho)^nu, where p is
    minimal with beta^p * rho1 < 1/4."""
    with mp.workprec(prec):
        rho = mpf(rho)
        lam = mpf(lam)
        alpha = 1 / (a * rho ** (a - 1))
        beta = 1 / (1 + 1 / rho)
        rho1 = (1 + rho) / alpha
        p = 0
        while beta**p * rho1 >= mpf(1) / 4:
            p += 1
        n_terms = 2 * a ** (p + 1)
        base = lam + rho
        if base > 1:
            log10K = (n_terms + 1) * mp.log10(base) - mp.log10(base - 1)
        elif base == 1:
            log10K = mp.log10(n_terms)
        else:
            log10K = mp.log10(base * (1 - base**n_terms) / (1 - base))
        return alpha, beta, rho1, p, n_terms, log10K


def grid_criterion(table: ConjugacyTable, levels_f, levels_g,
                   prec: int = 256) -> GridCriterionReport:
    """Structural isomorphism of two grid sequences plus the observed
    ratio deviation lambda and the implied (astronomical) K bound.

    Isomorphism is structural: the builds must have made identical case
    decisions level by level (counts and tags); the atom with the same
    construction index is the h-image because all boundaries are matched
    orbit points.  Raises NotIsomorphic with the first mismatch.
    """
    if len(levels_f) != len(levels_g):
        raise NotIsomorphic(
            f"level counts differ: {len(levels_f)} vs {len(levels_g)}")
    lam = 0.0
    a_obs = 2
    rho_obs = 1.0
    for lf, lg in zip(levels_f, levels_g):
        if len(lf.atoms) != len(lg.atoms):
            raise NotIsomorphic(
                f"level {lf.level}: atom counts {len(lf.atoms)} vs "
                f"{len(lg.atoms)}")
        for i, (af, ag) in enumerate(zip(lf.atoms, lg.atoms)):
            if (af.case, af.shape, af.M, af.m, af.k_hi - af.k_lo) != \
               (ag.case, ag.shape, ag.M, ag.m, ag.k_hi - ag.k_lo):
                raise NotIsomorphic(
                    f"level {lf.level}, atom {i}: structure "
                    f"({af.case},{af.shape}) vs ({ag.case},{ag.shape})")
        a_obs = max(a_obs, lf.children_max)
        order = lf.sorted_atoms()
        nf = len(order)
        for pidx in range(nf):
            a1, a2 = lf.atoms[order[pidx]], lf.atoms[order[(pidx + 1) % nf]]
            b1, b2 = lg.atoms[order[pidx]], lg.atoms[order[(pidx + 1) % nf]]
            rf = float(a1.arc.length / a2.arc.length)
            rg = float(b1.arc.length / b2.arc.length)
            lam = max(lam, abs(rf - rg))
            rho_obs = max(rho_obs, rf, 1 / rf)
    _, _, _, p, n_terms, log10K = qs_constant(a_obs, rho_obs, lam, prec)
    return GridCriterionReport(
        lambda_observed=lam, a=a_obs, rho=rho_obs, p=p,
        base=float(lam + rho_obs), n_terms=n_terms,
        log10_K=float(log10K), levels_checked=len(levels_f))


def aux_structure_match(aux_f, aux_g) -> bool:
    """Critical-time pattern equality of two auxiliary partitions: the
    testable core of 'h maps critical spots to critical spots'."""
    return (aux_f.critical_times == aux_g.critical_times
            and aux_f.a_next == aux_g.a_next)
