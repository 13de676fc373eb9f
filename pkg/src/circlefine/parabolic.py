"""Almost parabolic return maps, their fundamental-domain scaling, and
balanced decompositions of bridges.

A reduced bridge (a bridge minus its two lateral atoms) carries the
return iterate f^{q_{n+1}} as a translation-like diffeomorphism: it
shifts each constituent atom onto the next one and, deep enough in the
level hierarchy, has negative Schwarzian everywhere on the reduced
bridge.  Its fundamental domains then obey the inverse-square scaling
|J_nu| ~ |I| / min(nu, l+1-nu)^2, which is what the balanced (dyadic)
decomposition exploits.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from mpmath import mp, mpf

from .crossratio import KoebeReport, NestedPair, koebe_check
from .errors import OrbitHitsCritical, StructureBroken, TooShort
from .geometry import Arc, ccw_span, frac
from .maps import CircleMap
from .numerics import least_squares_slope
from .partition import AuxPartition, _orbit_direction


def reduced_bridge_range(aux: AuxPartition, spot_index: int):
    """(k_lo, k_hi) of the reduced bridge after critical time number
    ``spot_index``, or None when it has no atoms.

    The bridge spans Delta_{k_i+1}..Delta_{k_{i+1}-1}; the reduced bridge
    drops one atom at each end.
    """
    times = list(aux.critical_times) + [aux.a_next]
    lo = times[spot_index] + 2
    hi = times[spot_index + 1] - 2
    return (lo, hi) if lo <= hi else None


def return_schwarzian(circle_map: CircleMap, q: int, x):
    """Schwarzian of f^q at x via the cocycle sum
    S f^q(x) = sum_j Sf(f^j x) (Df^j x)^2, split into the contribution of
    orbit points inside critical windows (sigma1) and the rest (sigma2).

    Raises OrbitHitsCritical if an orbit point lands on a critical point.
    """
    prec = circle_map.precision_bits
    with mp.workprec(prec):
        y = frac(mpf(x))
        dcum = mpf(1)
        s1 = mpf(0)
        s2 = mpf(0)
        for j in range(q):
            d1 = circle_map.deriv(y, 1)
            if d1 <= 0:
                raise OrbitHitsCritical(f"orbit point {j} is critical")
            term = circle_map.schwarzian(y) * dcum * dcum
            if circle_map.window_index(y) is not None:
                s1 += term
            else:
                s2 += term
            dcum *= d1
            y = frac(circle_map.lift(y))
        return s1 + s2, s1, s2


@dataclass(frozen=True)
class AlmostParabolic:
    """A chain J_1..J_l of consecutive arcs shifted one step by f^q."""

    atoms: tuple          # Arc, index 0 is J_1
    q: int                # the return iterate
    level: int
    width: mpf            # min(|J_1|, |J_l|) / |union|
    schwarzian_max: mpf   # max sampled S f^q over the chain (negative = good)

    @property
    def length(self) -> int:
        return len(self.atoms)

    @property
    def domain_length(self):
        return sum(a.length for a in self.atoms)

    def order(self, nu: int) -> int:
        """min(nu, l+1-nu) for 1-based nu."""
        return min(nu, self.length + 1 - nu)


def detect_almost_parabolic(circle_map: CircleMap, aux: AuxPartition,
                            spot_index: int,
                            schwarzian_samples: int = 32) -> AlmostParabolic:
    """Verify and package the return map on a reduced bridge.

    Checks the translation structure f^{q_{n+1}}(Delta_k) = Delta_{k+1}
    numerically (midpoints must land in the successor atom) and samples
    the return Schwarzian on every atom.

    Raises TooShort when the reduced bridge is empty and StructureBroken
    when an atom image misses its successor.
    """
    rng = reduced_bridge_range(aux, spot_index)
    if rng is None:
        raise TooShort("reduced bridge is empty")
    k_lo, k_hi = rng
    n = aux.level
    q = aux.cf.q(n + 1)
    prec = circle_map.precision_bits
    atoms = [aux.delta_arc(k, 0) for k in range(k_lo, k_hi + 1)]
    with mp.workprec(prec):
        for k in range(k_lo, k_hi):
            x = atoms[k - k_lo].midpoint()
            for _ in range(q):
                x = frac(circle_map.lift(x))
            nxt = atoms[k - k_lo + 1]
            if not nxt.contains(x, fatten=mpf(2) ** -20):
                raise StructureBroken(
                    f"image of Delta_{k} midpoint misses Delta_{k + 1}")
        smax = None
        for arc in atoms:
            for x in arc.sample(schwarzian_samples):
                s, _, _ = return_schwarzian(circle_map, q, x)
                smax = s if smax is None else max(smax, s)
        total = sum(a.length for a in atoms)
        width = min(atoms[0].length, atoms[-1].length) / total
        return AlmostParabolic(atoms=tuple(atoms), q=q, level=n,
                               width=width, schwarzian_max=smax)


def synthetic_almost_parabolic(ell: int, scale=mpf(1), q: int = 1,
                               level: int = 0) -> AlmostParabolic:
    """Exact inverse-square model |J_nu| = scale / min(nu, l+1-nu)^2,
    laid out from 0; for oracle tests of the fitting code."""
    lengths = [scale / mpf(min(nu, ell + 1 - nu)) ** 2
               for nu in range(1, ell + 1)]
    total = sum(lengths)
    pos = mpf(0)
    atoms = []
    for ln in lengths:
        atoms.append(Arc(pos / (2 * total), (pos + ln) / (2 * total)))
        pos += ln
    dom = sum(a.length for a in atoms)
    return AlmostParabolic(atoms=tuple(atoms), q=q, level=level,
                           width=min(atoms[0].length, atoms[-1].length) / dom,
                           schwarzian_max=mpf(-1))


@dataclass(frozen=True)
class YoccozFit:
    slope: mpf              # log|J_nu| vs log order(nu); -2 is the law
    intercept: mpf
    constant: mpf           # tightest C with C^-1 <= |J_nu| ord^2 / |I| <= C
    residuals: tuple        # per-atom log deviation from the fitted line
    predicted: tuple        # fitted lengths per atom


def yoccoz_fit(ap: AlmostParabolic, edge_exclude: int = 2) -> YoccozFit:
    """Least-squares fit of the inverse-square fundamental-domain law.

    The ``edge_exclude`` outermost atoms on each side are left out of the
    regression (they sit at the width boundary) but still enter the
    envelope constant.  Requires length >= 8.
    """
    ell = ap.length
    if ell < 8:
        raise TooShort(f"need length >= 8, have {ell}")
    total = ap.domain_length
    xs, ys = [], []
    for nu in range(1, ell + 1):
        if edge_exclude < nu <= ell - edge_exclude or ell <= 2 * edge_exclude:
            xs.append(mp.log(mpf(ap.order(nu))))
            ys.append(mp.log(ap.atoms[nu - 1].length))
    slope, intercept = least_squares_slope(xs, ys)
    const = mpf(1)
    residuals = []
    predicted = []
    for nu in range(1, ell + 1):
        ln = ap.atoms[nu - 1].length
        ideal = total / mpf(ap.order(nu)) ** 2
        ratio = ln / ideal
        const = max(const, ratio, 1 / ratio)
        predicted.append(mp.e ** (intercept + slope * mp.log(mpf(ap.order(nu)))))
        residuals.append(mp.log(ln) - mp.log(predicted[-1]))
    return YoccozFit(slope=slope, intercept=intercept, constant=const,
                     residuals=tuple(residuals), predicted=tuple(predicted))


def grouped_ratio_check(ap: AlmostParabolic, n_triples: int = 200,
                        seed: int = 0):
    """Sum-ratio law over random triples k < l < m:
    (|J_{l+1}|+..+|J_m|) / (|J_{k+1}|+..+|J_l|) against k(m-l)/(m(l-k)).
    Returns the worst two-sided comparability factor."""
    ell = ap.length
    if ell < 4:
        raise TooShort("need at least 4 atoms")
    rng = random.Random(seed)
    prefix = [mpf(0)]
    for a in ap.atoms:
        prefix.append(prefix[-1] + a.length)
    worst = mpf(1)
    for _ in range(n_triples):
        k, l, m = sorted(rng.sample(range(1, ell + 1), 3))
        if k == l or l == m:
            continue
        num = prefix[m] - prefix[l]
        den = prefix[l] - prefix[k]
        law = mpf(k) * (m - l) / (mpf(m) * (l - k))
        r = (num / den) / law
        worst = max(worst, r, 1 / r)
    return worst


# ---------------------------------------------------------------------------
# balanced decompositions


@dataclass(frozen=True)
class BalancedDecomposition:
    """Dyadic grouping of a chain J_1..J_l (1-based, inclusive ranges).

    laterals_left[i] = L_i spans 2^i atoms, laterals_right[i] = R_i
    likewise; central[i] = M_i for 0 <= i <= d+1 with M_0 the whole chain.
    """

    ell: int
    depth: int                       # d: largest with 2^(d+1) <= l/2
    laterals_left: tuple             # (lo, hi) 1-based inclusive
    laterals_right: tuple
    central: tuple                   # M_0 .. M_{d+1}

    def final_central(self):
        return self.central[-1]


def balanced_decomposition(ell: int) -> BalancedDecomposition:
    """Index-level balanced decomposition of a chain of ``ell`` atoms.

    L_i = J_{2^i}..J_{2^{i+1}-1}, R_i mirrored, M_i = J_{2^i}..J_{l+1-2^i}.
    Requires ell >= 4 so that the depth d >= 0.
    """
    if ell < 4:
        raise TooShort(f"need at least 4 atoms, have {ell}")
    # largest d with 2^(d+1) <= ell/2, i.e. 2^(d+2) <= ell
    d = 0
    while 2 ** (d + 3) <= ell:
        d += 1
    lat_l = tuple((2**i, 2 ** (i + 1) - 1) for i in range(d + 1))
    lat_r = tuple((ell + 2 - 2 ** (i + 1), ell + 1 - 2**i) for i in range(d + 1))
    central = tuple((2**i, ell + 1 - 2**i) for i in range(d + 2))
    return BalancedDecomposition(ell=ell, depth=d, laterals_left=lat_l,
                                 laterals_right=lat_r, central=central)


def decomposition_report(ap: AlmostParabolic):
    """Balanced decomposition of the chain plus the comparability ratios
    |L_i| vs |M_{i+1}| vs |R_i|."""
    dec = balanced_decomposition(ap.length)
    prefix = [mpf(0)]
    for a in ap.atoms:
        prefix.append(prefix[-1] + a.length)

    def span_len(rng):
        lo, hi = rng
        return prefix[hi] - prefix[lo - 1]

    ratios = []
    for i in range(dec.depth + 1):
        li = span_len(dec.laterals_left[i])
        ri = span_len(dec.laterals_right[i])
        mi = span_len(dec.central[i + 1])
        ratios.append((li / mi, ri / mi))
    return dec, ratios


def decompose_full_bridge(circle_map: CircleMap, aux: AuxPartition,
                          spot_index: int, j: int = 0, tau=mpf("0.1")):
    """Balanced decomposition over the full bridge f^j(G_i).

    For the primary bridge (j = 0) the reduced-bridge chain is extended
    by the two lateral atoms and re-decomposed.  For secondary bridges
    the primary atom ranges are pushed forward by f^j (exact, since all
    boundaries are orbit points) and a Koebe distortion audit of f^j on
    the bridge is attached.  Bridges of at most 2 atoms return the
    trivial decomposition flag.
    """
    times = list(aux.critical_times) + [aux.a_next]
    lo = times[spot_index] + 1
    hi = times[spot_index + 1] - 1
    if lo > hi:
        raise TooShort("bridge is empty")
    n_atoms = hi - lo + 1
    atoms = tuple(aux.delta_arc(k, j) for k in range(lo, hi + 1))
    if n_atoms <= 2:
        return {"trivial": True, "atoms": atoms, "dec": None, "koebe": None}
    dec = balanced_decomposition(n_atoms)
    koebe: KoebeReport | None = None
    if j > 0:
        # audit the push-forward distortion of f^j: M = reduced bridge
        # inside T = full bridge
        rng = reduced_bridge_range(aux, spot_index)
        if rng is not None:
            full = aux._range_arc(lo, hi, 0)
            red = aux._range_arc(rng[0], rng[1], 0)
            pair = NestedPair.from_arcs(red, full)
            koebe = koebe_check(circle_map, j, pair, tau)
    return {"trivial": False, "atoms": atoms, "dec": dec, "koebe": koebe}
