"""Cross-ratios, distortion of iterates, and distortion-product audits.

For intervals M compactly inside T with side components L and R:

    a(M,T) = |M||T| / (|L||R|)
    b(M,T) = |L||R| / (|L u M| |M u R|)

so that 1/b = 1 + a.  The b-ratio is the one used throughout: its log is
minus the Poincare length of M inside T, it is preserved by Moebius maps
and weakly contracted by maps with negative Schwarzian on small
intervals.  The distortion of a map g on the pair is
D(g; M, T) = b(gM, gT) / b(M, T).
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpf

from .errors import CriticalInside, DegeneratePair, NonInjective
from .geometry import Arc, ccw_span, frac
from .maps import CircleMap


@dataclass(frozen=True)
class NestedPair:
    """Four circle points t_left, m_left, m_right, t_right in ccw order,
    cutting T = [t_left, t_right] into L, M, R."""

    tl: mpf
    ml: mpf
    mr: mpf
    tr: mpf

    def __post_init__(self):
        if min(self.sides()) <= 0:
            raise DegeneratePair("L, M, R must all have positive length")
        if sum(self.sides()) >= 1:
            raise DegeneratePair("T must be shorter than the full circle")

    def sides(self):
        """(|L|, |M|, |R|)."""
        return (ccw_span(self.tl, self.ml), ccw_span(self.ml, self.mr),
                ccw_span(self.mr, self.tr))

    @classmethod
    def from_arcs(cls, inner: Arc, outer: Arc) -> "NestedPair":
        if ccw_span(outer.left, inner.left) >= ccw_span(outer.left, outer.right):
            raise DegeneratePair("inner arc does not sit inside outer")
        return cls(outer.left, inner.left, inner.right, outer.right)

    @classmethod
    def from_lengths(cls, L, M, R, anchor=mpf(0)) -> "NestedPair":
        return cls(frac(anchor), frac(anchor + L), frac(anchor + L + M),
                   frac(anchor + L + M + R))

    def points(self):
        return (self.tl, self.ml, self.mr, self.tr)


def cross_ratio_a(pair: NestedPair):
    L, M, R = pair.sides()
    return (M * (L + M + R)) / (L * R)


def cross_ratio_b(pair: NestedPair):
    L, M, R = pair.sides()
    return (L * R) / ((L + M) * (M + R))


def poincare_log_b(pair: NestedPair, prec: int = 256):
    """log b(M,T) as minus the Poincare length of M inside T, by adaptive
    Gauss-Legendre quadrature (split at the midpoint of M; the density is
    singular only at the ends of T, outside the integration range)."""
    with mp.workprec(prec):
        L, M, R = pair.sides()
        T = L + M + R
        rho = lambda x: T / (x * (T - x))
        mid = L + M / 2
        val = mp.quad(rho, [L, mid, L + M], method="gauss-legendre")
        return -val


def _push_points(g, pts, k: int):
    if isinstance(g, CircleMap):
        out = []
        with mp.workprec(g.precision_bits):
            for p in pts:
                x = mpf(p)
                for _ in range(k):
                    x = frac(g.lift(x))
                out.append(x)
        return out
    # generic monotone circle function
    out = []
    for p in pts:
        x = p
        for _ in range(k):
            x = frac(g(x))
        out.append(x)
    return out


def distortion(g, k: int, pair: NestedPair):
    """D(g^k; M, T) = b(g^k M, g^k T) / b(M, T).

    Raises NonInjective if the images of the four defining points are no
    longer in counterclockwise order spanning less than the whole circle.
    """
    img = _push_points(g, pair.points(), k)
    spans = [ccw_span(img[0], img[1]), ccw_span(img[1], img[2]),
             ccw_span(img[2], img[3])]
    if min(spans) <= 0 or sum(spans) >= 1:
        raise NonInjective(f"iterate {k} folds the outer interval")
    total = ccw_span(img[0], img[3])
    if abs(total - sum(spans)) > mpf(2) ** -30 * max(total, sum(spans)):
        raise NonInjective("image points out of order")
    ipair = NestedPair(*img)
    return cross_ratio_b(ipair) / cross_ratio_b(pair)


def distortion_line(fn, tl, ml, mr, tr):
    """Distortion of a monotone real function on a line-model pair; for
    exactness checks against Moebius transformations."""
    vl, v1, v2, vr = fn(tl), fn(ml), fn(mr), fn(tr)

    def b(a, b1, b2, c):
        return ((b1 - a) * (c - b2)) / ((b2 - a) * (c - b1))

    return b(vl, v1, v2, vr) / b(tl, ml, mr, tr)


@dataclass(frozen=True)
class CriAudit:
    product: mpf
    multiplicity: int
    fitted_constant: mpf   # product**(1/multiplicity), when meaningful
    n_factors: int


def _family_multiplicity(arcs) -> int:
    """Max number of arcs covering a single point (event sweep)."""
    events = []
    for a in arcs:
        ln = a.length
        start = a.left
        end = frac(start + ln)
        if ln <= 0:
            continue
        if start < end:
            events.append((start, 1))
            events.append((end, -1))
        else:  # wraps
            events.append((start, 1))
            events.append((mpf(1), -1))
            events.append((mpf(0), 1))
            events.append((end, -1))
    if not events:
        return 0
    events.sort(key=lambda e: (e[0], -e[1]))
    # closed arcs: open events before close at equal position -> sort puts
    # +1 before -1, counting shared endpoints as overlapping
    cur = best = 0
    for _, d in events:
        cur += d
        best = max(best, cur)
    return best


def cri_audit(g: CircleMap, pairs_with_steps) -> CriAudit:
    """Product of per-step distortions along the orbits of nested pairs.

    ``pairs_with_steps`` is a list of (NestedPair, n_steps).  Every factor
    D(g; g^j M, g^j T) for 0 <= j < n_steps enters the product, and the
    multiplicity of the whole family {g^j(T)} is computed exactly by an
    endpoint sweep.  The fitted constant is product^(1/multiplicity).
    """
    prod = mpf(1)
    arcs = []
    n = 0
    with mp.workprec(g.precision_bits):
        for pair, steps in pairs_with_steps:
            cur = pair
            for _ in range(steps):
                arcs.append(Arc(cur.tl, cur.tr))
                prod *= distortion(g, 1, cur)
                cur = NestedPair(*_push_points(g, cur.points(), 1))
                n += 1
            arcs.append(Arc(cur.tl, cur.tr))
        m = _family_multiplicity(arcs)
        fitted = prod ** (mpf(1) / m) if m > 0 else mpf(1)
        return CriAudit(product=prod, multiplicity=m, fitted_constant=fitted,
                        n_factors=n)


@dataclass(frozen=True)
class KoebeReport:
    ratio: mpf            # sup |Df^k| / inf |Df^k| over M
    image_tau: mpf        # min(|L'|, |R'|) / |M'| for the image pair
    total_image_length: mpf


def koebe_check(g: CircleMap, k: int, pair: NestedPair, tau,
                n_samples: int = 31) -> KoebeReport:
    """Derivative distortion of g^k over M for a pair whose iterates stay
    away from the critical points.

    Raises CriticalInside when some intermediate image of T contains a
    critical point (g^k is not a diffeomorphism on T).
    """
    prec = g.precision_bits
    with mp.workprec(prec):
        T = Arc(pair.tl, pair.tr)
        total = mpf(0)
        cur = [mpf(p) for p in pair.points()]
        for j in range(k):
            arc = Arc(cur[0], cur[3])
            total += arc.length
            for cp in g.critical_points:
                if arc.contains(cp.position):
                    raise CriticalInside(
                        f"critical point inside image {j} of T")
            cur = _push_points(g, cur, 1)
        M = Arc(pair.ml, pair.mr)
        pts = [pair.ml] + M.sample(n_samples) + [pair.mr]
        dmin = dmax = None
        for x in pts:
            d = mpf(1)
            y = mpf(x)
            for _ in range(k):
                d *= g.deriv(y, 1)
                y = frac(g.lift(y))
            d = abs(d)
            dmin = d if dmin is None else min(dmin, d)
            dmax = d if dmax is None else max(dmax, d)
        img = _push_points(g, pair.points(), k)
        Lp = ccw_span(img[0], img[1])
        Mp = ccw_span(img[1], img[2])
        Rp = ccw_span(img[2], img[3])
        return KoebeReport(ratio=dmax / dmin, image_tau=min(Lp, Rp) / Mp,
                           total_image_length=total)
