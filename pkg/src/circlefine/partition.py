"""Dynamical partitions and the auxiliary spot/bridge refinement.

The level-n partition of a point c consists of the long atoms
f^i(I_n(c)), 0 <= i < q_{n+1}, and the short atoms f^j(I_{n+1}(c)),
0 <= j < q_n, where I_n(c) is the closest-return interval with endpoints
c and f^{q_n}(c).  Every atom endpoint is an orbit point of c, so all
structural checks here reduce to integer index bookkeeping; float
comparisons only enter when sorting the endpoints around the circle,
and that order is cross-validated against the rotation-number order.
"""

from __future__ import annotations

import bisect as _bisect
import random
from dataclasses import dataclass, field

from mpmath import mp, mpf

from .errors import CoverageFailure, LevelTooLow, OrderViolation, PrecisionExhausted
from .geometry import Arc, ccw_span, circle_dist, frac
from .maps import CircleMap
from .rotation import ContinuedFraction

#: Fattening factor used when testing whether an atom contains a critical
#: point; guards against boundary grazing at finite precision.
CONTAIN_FATTEN = mpf(2) ** -40


@dataclass(frozen=True)
class PartitionAtom:
    kind: str          # "long" or "short"
    index: int         # image index: long = I_n^index, short = I_{n+1}^index
    arc: Arc

    @property
    def length(self):
        return self.arc.length


@dataclass
class DynPartition:
    """Level-n dynamical partition based at a point c, circularly sorted."""

    level: int
    base: mpf
    cf: ContinuedFraction
    atoms: list            # circular order, starting at the atom with left endpoint c... not necessarily; sorted by position
    n_long: int
    n_short: int

    @property
    def size(self) -> int:
        return len(self.atoms)

    def locate(self, x) -> int:
        """Index (in circular order) of the atom whose half-open arc
        [left, right) contains x."""
        lefts = self._lefts
        t = frac(mpf(x) - self.atoms[0].arc.left)
        i = _bisect.bisect_right(lefts, t) - 1
        return i if i >= 0 else len(self.atoms) - 1

    @property
    def _lefts(self):
        if not hasattr(self, "_lefts_cache"):
            base = self.atoms[0].arc.left
            self._lefts_cache = [ccw_span(base, a.arc.left) for a in self.atoms]
        return self._lefts_cache


def _orbit_direction(n: int) -> int:
    """Side of f^{q_n}(x) relative to x: +1 counterclockwise for even n.

    This is the sign of q_n*rho - p_n, which alternates with n for every
    rotation number in (0,1)."""
    return 1 if n % 2 == 0 else -1


def _atom_arc(orbit, i: int, span: int, direction: int) -> Arc:
    a, b = i, i + span
    if direction > 0:
        return Arc(orbit[a], orbit[b], a, b)
    return Arc(orbit[b], orbit[a], b, a)


def check_orbit_order(orbit, rho, prec: int = 256) -> None:
    """Verify the circular order of the orbit equals the rotation order.

    Raises OrderViolation on mismatch -- the map's combinatorics at this
    depth do not match the claimed rotation number (or precision died).
    """
    L = len(orbit)
    with mp.workprec(prec):
        rot = [frac(i * rho) for i in range(L)]
        order_map = sorted(range(L), key=lambda i: orbit[i])
        order_rot = sorted(range(L), key=lambda i: rot[i])
    # align the two cyclic sequences at index 0
    km = order_map.index(0)
    kr = order_rot.index(0)
    order_map = order_map[km:] + order_map[:km]
    order_rot = order_rot[kr:] + order_rot[:kr]
    if order_map != order_rot:
        for a, b in zip(order_map, order_rot):
            if a != b:
                raise OrderViolation(
                    f"orbit order diverges from rotation order at indices "
                    f"{a} vs {b} (orbit length {L})")


def build_partition(circle_map: CircleMap, c, n: int, cf: ContinuedFraction,
                    validate: bool = True) -> DynPartition:
    """Construct the level-n partition based at c.

    ``cf`` must describe the map's rotation number at least to depth n+1.
    Raises CoverageFailure if the atoms fail to tile the circle, and
    OrderViolation if the orbit's circular order contradicts cf.
    """
    if cf.depth < n + 2:
        raise ValueError(f"need cf depth >= {n + 2}, have {cf.depth}")
    qn, qn1 = cf.q(n), cf.q(n + 1)
    L = qn + qn1
    prec = circle_map.precision_bits
    with mp.workprec(prec):
        c = frac(mpf(c))
        orbit = circle_map.orbit(c, L - 1)
        dir_n = _orbit_direction(n)
        atoms = [
            PartitionAtom("long", i, _atom_arc(orbit, i, qn, dir_n))
            for i in range(qn1)
        ] + [
            PartitionAtom("short", j, _atom_arc(orbit, j, qn1, -dir_n))
            for j in range(qn)
        ]
        atoms.sort(key=lambda a: a.arc.left)
        part = DynPartition(level=n, base=c, cf=cf, atoms=atoms,
                            n_long=qn1, n_short=qn)
        if validate:
            _validate_tiling(part, prec)
            check_orbit_order(orbit, cf.value(prec + 16), prec)
        return part


def _validate_tiling(part: DynPartition, prec: int) -> None:
    atoms = part.atoms
    with mp.workprec(prec):
        total = mpf(0)
        for k, atom in enumerate(atoms):
            nxt = atoms[(k + 1) % len(atoms)]
            if atom.arc.right_index != nxt.arc.left_index:
                raise CoverageFailure(
                    f"atom {k} right endpoint (orbit index "
                    f"{atom.arc.right_index}) does not start atom {k + 1}")
            total += atom.length
        tol = 2 * len(atoms) * mpf(2) ** (1 - prec)
        if abs(total - 1) > tol:
            raise CoverageFailure(
                f"total length deviates from 1 by {mp.nstr(abs(total - 1), 5)}")


def refines(finer: DynPartition, coarser: DynPartition) -> bool:
    """Every atom of ``finer`` lies inside one atom of ``coarser``.

    Uses endpoint orbit indices only: the coarser endpoints are a subset
    of the finer ones, so it suffices that no coarser endpoint is
    interior to a finer atom's index interval, which reduces to locating
    arcs.  Implemented by position lookup plus index confirmation.
    """
    lefts = [a.arc.left for a in coarser.atoms]
    base = lefts[0]
    keys = [ccw_span(base, x) for x in lefts]
    for atom in finer.atoms:
        t = ccw_span(base, atom.arc.left)
        i = _bisect.bisect_right(keys, t) - 1
        host = coarser.atoms[i if i >= 0 else len(coarser.atoms) - 1]
        if ccw_span(host.arc.left, atom.arc.left) > host.length:
            return False
        if ccw_span(host.arc.left, atom.arc.right) > host.length:
            return False
    return True


# ---------------------------------------------------------------------------
# comparability reports


@dataclass(frozen=True)
class AdjacencyReport:
    level: int
    max_ratio: mpf
    min_ratio: mpf
    constant: mpf                 # max(max_ratio, 1/min_ratio)
    worst_pair: tuple


def adjacency_report(part: DynPartition) -> AdjacencyReport:
    """Length ratios over all adjacent atom pairs."""
    atoms = part.atoms
    mx, mn, worst = None, None, None
    for k, atom in enumerate(atoms):
        nxt = atoms[(k + 1) % len(atoms)]
        r = atom.length / nxt.length
        if mx is None or r > mx:
            mx = r
            worst = ((atom.kind, atom.index), (nxt.kind, nxt.index))
        if mn is None or r < mn:
            mn = r
    return AdjacencyReport(level=part.level, max_ratio=mx, min_ratio=mn,
                           constant=max(mx, 1 / mn), worst_pair=worst)


def symmetric_return_check(circle_map: CircleMap, cf: ContinuedFraction,
                           n: int, n_samples: int = 50, seed: int = 0):
    """Worst two-sided ratio |f^{q_n}(x)-x| / |x-f^{-q_n}(x)| over random x."""
    qn = cf.q(n)
    prec = circle_map.precision_bits
    rng = random.Random(seed)
    worst = mpf(0)
    with mp.workprec(prec):
        for _ in range(n_samples):
            x = mpf(rng.getrandbits(64)) / mpf(2) ** 64
            fwd = x
            for _ in range(qn):
                fwd = frac(circle_map.lift(fwd))
            bwd = x
            for _ in range(qn):
                bwd = circle_map.backward(bwd)
            num = circle_dist(x, fwd)
            den = circle_dist(x, bwd)
            if den == 0 or num == 0:
                raise PrecisionExhausted("zero return distance")
            r = num / den
            worst = max(worst, r, 1 / r)
    return worst


SIX_INTERVAL_NAMES = ("I_n", "I_n+1", "I_n^qn", "I_n^qn+1", "I_n+1^qn",
                      "I_n^qn+1-qn")


def six_interval_check(circle_map: CircleMap, c, cf: ContinuedFraction, n: int):
    """All 15 pairwise length ratios of the six closest-return intervals
    around the base point; returns (ratios dict, empirical constant)."""
    qn, qn1 = cf.q(n), cf.q(n + 1)
    prec = circle_map.precision_bits
    with mp.workprec(prec):
        orbit = circle_map.orbit(frac(mpf(c)), qn + qn1)
        dn, dn1 = _orbit_direction(n), _orbit_direction(n + 1)
        lengths = {
            "I_n": _atom_arc(orbit, 0, qn, dn).length,
            "I_n+1": _atom_arc(orbit, 0, qn1, dn1).length,
            "I_n^qn": _atom_arc(orbit, qn, qn, dn).length,
            "I_n^qn+1": _atom_arc(orbit, qn1, qn, dn).length,
            "I_n+1^qn": _atom_arc(orbit, qn, qn1, dn1).length,
            "I_n^qn+1-qn": _atom_arc(orbit, qn1 - qn, qn, dn).length,
        }
        ratios = {}
        names = list(SIX_INTERVAL_NAMES)
        c4 = mpf(1)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                r = lengths[a] / lengths[b]
                ratios[(a, b)] = r
                c4 = max(c4, r, 1 / r)
        return ratios, c4


def intersect_comparability(circle_map: CircleMap, cf: ContinuedFraction,
                            c, c2, n: int):
    """Worst two-sided length ratio over interior-intersecting atom pairs
    of the level-n partitions based at two critical points.

    Raises LevelTooLow when an atom of either partition contains two
    critical points, in which case the comparability statement does not
    yet apply at this level.
    """
    pa = build_partition(circle_map, c, n, cf)
    pb = build_partition(circle_map, c2, n, cf)
    crits = [cp.position for cp in circle_map.critical_points]
    for part in (pa, pb):
        for atom in part.atoms:
            inside = sum(1 for x in crits if atom.arc.contains(x))
            if inside >= 2:
                raise LevelTooLow(
                    f"atom ({atom.kind},{atom.index}) of level {n} holds "
                    f"{inside} critical points")
    worst = mpf(0)
    worst_pair = None
    base = pb.atoms[0].arc.left
    keys = [ccw_span(base, a.arc.left) for a in pb.atoms]
    m = len(pb.atoms)
    for atom in pa.atoms:
        t = ccw_span(base, atom.arc.left)
        i = _bisect.bisect_right(keys, t) - 1
        if i < 0:
            i = m - 1
        j = i
        while True:
            other = pb.atoms[j % m]
            if not atom.arc.overlaps_interior(other.arc):
                if j > i:
                    break
            else:
                r = atom.length / other.length
                r = max(r, 1 / r)
                if r > worst:
                    worst, worst_pair = r, ((atom.kind, atom.index),
                                            (other.kind, other.index))
            j += 1
            if j - i >= m:
                break
    return worst, worst_pair


def first_admissible_level(circle_map: CircleMap, cf: ContinuedFraction,
                           n_max: int = 20) -> int:
    """Smallest level at which no atom holds two critical points."""
    crits = [cp.position for cp in circle_map.critical_points]
    if len(crits) < 2:
        return 0
    for n in range(n_max + 1):
        if cf.depth < n + 2:
            break
        part = build_partition(circle_map, crits[0], n, cf, validate=False)
        if all(sum(1 for x in crits if a.arc.contains(x)) < 2
               for a in part.atoms):
            return n
    raise LevelTooLow(f"no admissible level up to {n_max}")


# ---------------------------------------------------------------------------
# auxiliary partition: critical spots and bridges


@dataclass(frozen=True)
class AuxAtom:
    kind: str          # "spot" | "bridge" | "deep" | "short"
    spot_index: int    # which critical time (spots/bridges), else -1
    j: int             # forward image index (spots/bridges/deep), short: ell
    k_lo: int          # Delta-range (bridges); spots: k; deep/short: -1
    k_hi: int
    arc: Arc

    @property
    def length(self):
        return self.arc.length


@dataclass
class AuxPartition:
    """Level-n auxiliary partition based at c_0: the orbit images of the
    decomposition I_n = I_{n+2} u spots u bridges, with the short atoms
    of level n carried over unchanged."""

    level: int
    base: mpf
    cf: ContinuedFraction
    critical_times: tuple[int, ...]    # k_0 = 0 always included, sorted
    a_next: int                        # a_{n+1}
    atoms: list                        # circularly sorted AuxAtoms
    empty_bridges: int
    _orbit: list = field(default_factory=list, repr=False)

    @property
    def r(self) -> int:
        return len(self.critical_times) - 1

    def primary_bridges(self):
        """(spot_index, k_lo, k_hi) of the bridges inside I_n(c_0), with
        empty ones skipped; k_hi is inclusive."""
        times = list(self.critical_times) + [self.a_next]
        out = []
        for i in range(len(self.critical_times)):
            lo, hi = times[i] + 1, times[i + 1] - 1
            if lo <= hi:
                out.append((i, lo, hi))
        return out

    def delta_arc(self, k: int, j: int = 0) -> Arc:
        """Arc of f^j(Delta_k)."""
        return self._range_arc(k, k, j)

    def _range_arc(self, k_lo: int, k_hi: int, j: int) -> Arc:
        # f^j(Delta_{k_lo} u .. u Delta_{k_hi}); consecutive Delta blocks
        # chain in the orientation of the level-(n+1) atoms they are.
        qn, qn1 = self.cf.q(self.level), self.cf.q(self.level + 1)
        a = qn + k_lo * qn1 + j
        b = qn + (k_hi + 1) * qn1 + j
        orbit = self._orbit
        if _orbit_direction(self.level + 1) > 0:
            return Arc(orbit[a], orbit[b], a, b)
        return Arc(orbit[b], orbit[a], b, a)


def find_critical_times(circle_map: CircleMap, c0, n: int,
                        cf: ContinuedFraction, validate: bool = False):
    """Critical times at level n (with 0 always included) and a_{n+1}.

    A time 1 <= k < a_{n+1} is critical when some forward image
    f^j(Delta_k), 0 <= j < q_{n+1}, contains a critical point of the map
    (equivalently, Delta_k contains a critical point of the return map
    f^{q_{n+1}}).  Containment is tested on atoms fattened by 2^-40 of
    their length against boundary grazing.
    """
    if cf.depth < n + 3:
        raise ValueError(f"need cf depth >= {n + 3}, have {cf.depth}")
    qn, qn1, qn2 = cf.q(n), cf.q(n + 1), cf.q(n + 2)
    with mp.workprec(circle_map.precision_bits):
        pnext = build_partition(circle_map, frac(mpf(c0)), n + 1, cf,
                                validate=validate)
        times = {0}
        for cp in circle_map.critical_points:
            x = cp.position
            i = pnext.locate(x)
            for cand in (i - 1, i, i + 1):
                atom = pnext.atoms[cand % pnext.size]
                if atom.kind != "long":
                    continue
                if not atom.arc.contains(x, fatten=CONTAIN_FATTEN):
                    continue
                idx = atom.index
                if qn <= idx < qn2:
                    times.add((idx - qn) // qn1)
    return tuple(sorted(times)), cf.a(n + 1)


def build_aux_partition(circle_map: CircleMap, c0, n: int,
                        cf: ContinuedFraction, validate: bool = True) -> AuxPartition:
    """Critical spots and bridges at level n, based at c0, as a full
    circle partition (the short atoms of level n are carried over)."""
    if cf.depth < n + 3:
        raise ValueError(f"need cf depth >= {n + 3}, have {cf.depth}")
    qn, qn1, qn2 = cf.q(n), cf.q(n + 1), cf.q(n + 2)
    a_next = cf.a(n + 1)
    prec = circle_map.precision_bits
    with mp.workprec(prec):
        c0 = frac(mpf(c0))
        L = qn2 + qn1  # enough for all image endpoints
        orbit = circle_map.orbit(c0, L - 1)
        critical_times, _ = find_critical_times(circle_map, c0, n, cf,
                                                validate=validate)
        aux = AuxPartition(level=n, base=c0, cf=cf,
                           critical_times=critical_times, a_next=a_next,
                           atoms=[], empty_bridges=0, _orbit=orbit)
        # assemble atoms: spots/bridges/deep for each 0 <= j < q_{n+1},
        # shorts carried over
        atoms = []
        empty = 0
        tlist = list(critical_times) + [a_next]
        dshort = _orbit_direction(n + 1)
        for j in range(qn1):
            for i, k in enumerate(critical_times):
                atoms.append(AuxAtom("spot", i, j, k, k, aux._range_arc(k, k, j)))
                lo, hi = k + 1, tlist[i + 1] - 1
                if lo <= hi:
                    atoms.append(AuxAtom("bridge", i, j, lo, hi,
                                         aux._range_arc(lo, hi, j)))
                else:
                    empty += 1
            atoms.append(AuxAtom("deep", -1, j, -1, -1,
                                 _atom_arc(orbit, j, qn2, _orbit_direction(n + 2))))
        for ell in range(qn):
            atoms.append(AuxAtom("short", -1, ell, -1, -1,
                                 _atom_arc(orbit, ell, qn1, dshort)))
        atoms.sort(key=lambda a: a.arc.left)
        aux.atoms = atoms
        aux.empty_bridges = empty
        if validate:
            _validate_aux(aux, prec)
        return aux


def _validate_aux(aux: AuxPartition, prec: int) -> None:
    qn, qn1 = aux.cf.q(aux.level), aux.cf.q(aux.level + 1)
    r = aux.r
    n_spots = sum(1 for a in aux.atoms if a.kind == "spot")
    n_deep = sum(1 for a in aux.atoms if a.kind == "deep")
    n_short = sum(1 for a in aux.atoms if a.kind == "short")
    n_bridge = sum(1 for a in aux.atoms if a.kind == "bridge")
    if n_spots != (r + 1) * qn1 or n_deep != qn1 or n_short != qn:
        raise CoverageFailure("atom census mismatch in auxiliary partition")
    if n_bridge + aux.empty_bridges != (r + 1) * qn1:
        raise CoverageFailure("bridge census mismatch")
    with mp.workprec(prec):
        total = mpf(0)
        for k, atom in enumerate(aux.atoms):
            nxt = aux.atoms[(k + 1) % len(aux.atoms)]
            if atom.arc.right_index != nxt.arc.left_index:
                raise CoverageFailure(
                    f"auxiliary atoms {k},{k + 1} do not chain "
                    f"({atom.kind} -> {nxt.kind})")
            total += atom.length
        tol = 2 * len(aux.atoms) * mpf(2) ** (1 - prec)
        if abs(total - 1) > tol:
            raise CoverageFailure("auxiliary atoms do not tile the circle")


@dataclass(frozen=True)
class SpotBridgeReport:
    level: int
    r: int
    spot_ratios: tuple           # |Delta_{k_i}| / |I_n| for each time
    bridge_ratios: tuple         # |G_i| / |I_n| for non-empty bridges
    empty_bridges: int
    consec_max: mpf              # worst adjacent ratio across all of P_n*
    consec_constant: mpf


def spot_and_bridge_size_check(aux: AuxPartition) -> SpotBridgeReport:
    """Relative sizes of spots and bridges, plus adjacent-atom ratios of
    the full auxiliary partition."""
    In_len = _atom_arc(aux._orbit, 0, aux.cf.q(aux.level),
                       _orbit_direction(aux.level)).length
    spot_ratios = tuple(aux.delta_arc(k, 0).length / In_len
                        for k in aux.critical_times)
    bridge_ratios = tuple(aux._range_arc(lo, hi, 0).length / In_len
                          for _, lo, hi in aux.primary_bridges())
    mx, mn = None, None
    for k, atom in enumerate(aux.atoms):
        nxt = aux.atoms[(k + 1) % len(aux.atoms)]
        rr = atom.length / nxt.length
        mx = rr if mx is None else max(mx, rr)
        mn = rr if mn is None else min(mn, rr)
    return SpotBridgeReport(
        level=aux.level, r=aux.r, spot_ratios=spot_ratios,
        bridge_ratios=bridge_ratios, empty_bridges=aux.empty_bridges,
        consec_max=mx, consec_constant=max(mx, 1 / mn))
