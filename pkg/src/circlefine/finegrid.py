"""Nested refinement grids built from the auxiliary partitions.

Grid atoms come in three shapes, all with exact orbit-index boundaries:

* plain  -- a single long atom I_M^idx of some dynamical partition;
* range  -- a block f^j(Delta_{k_lo} u .. u Delta_{k_hi}) inside one
  bridge of some auxiliary partition;
* every range knows its host bridge, so balanced-decomposition splits
  are recomputed from pure index arithmetic.

Case tags: b1 = single auxiliary atom, b2 = central interval of a
balanced bridge decomposition, b3 = union of >= 2 consecutive next-level
atoms inside one auxiliary atom.

Splitting rules per level:
 (1) a plain atom splits into its spot/bridge/deep star decomposition
     one partition level deeper (single-atom bridges are normalized to
     plain children);
 (2) a whole regular bridge splits into its constituent atoms; a
     saddle-node bridge splits into L0 | M1 | R0 of its balanced
     decomposition;
 (3) a central interval M_i splits into L_i | M_{i+1} | R_i; the final
     central interval M_{d+1} has no further central structure and is
     halved like a lateral block from then on (flagged);
 (4) lateral/halved blocks split into two nearly equal halves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from mpmath import mp, mpf

from .errors import GridInvalid
from .geometry import Arc, ccw_span, frac
from .maps import CircleMap
from .parabolic import balanced_decomposition
from .partition import _atom_arc, _orbit_direction, find_critical_times
from .rotation import ContinuedFraction

SADDLE_NODE_THRESHOLD = 1000


@dataclass(frozen=True)
class GridAtom:
    case: str               # "b1" | "b2" | "b3"
    shape: str              # "plain" | "range"
    prov_level: int         # level of the auxiliary partition it came from
    M: int = -1             # plain: partition level of the long atom
    idx: int = -1           # plain: image index; range: image index j
    m: int = -1             # range: bridge level
    spot_i: int = -1        # range: which bridge
    k_lo: int = -1          # range: inclusive Delta block
    k_hi: int = -1
    host_lo: int = -1       # range: whole host bridge block
    host_hi: int = -1
    depth_i: int = -1       # central intervals: index i of M_i
    final_central: bool = False
    whole_bridge: bool = False
    parent: int = -1        # index into the previous level's atom list
    arc: Arc = None

    @property
    def n_units(self) -> int:
        """Constituent Delta count for ranges, 1 for plain atoms."""
        return 1 if self.shape == "plain" else self.k_hi - self.k_lo + 1


@dataclass
class FineGridLevel:
    level: int
    atoms: list                       # construction order
    children_max: int = 0

    def sorted_atoms(self):
        return sorted(range(len(self.atoms)),
                      key=lambda i: self.atoms[i].arc.left)


class GridBuilder:
    """Shared per-map state: orbit, critical times, and arc construction."""

    def __init__(self, circle_map: CircleMap, c0, cf: ContinuedFraction,
                 sn_threshold: int = SADDLE_NODE_THRESHOLD):
        self.map = circle_map
        self.cf = cf
        self.sn_threshold = max(sn_threshold, 4)
        with mp.workprec(circle_map.precision_bits):
            self.c0 = frac(mpf(c0))
        self._times: dict[int, tuple] = {}

    def times(self, m: int):
        if m not in self._times:
            self._times[m] = find_critical_times(self.map, self.c0, m, self.cf)
        return self._times[m]

    def orbit(self, upto: int):
        return self.map.orbit(self.c0, upto)

    # -- arcs --------------------------------------------------------------
    def plain_arc(self, M: int, idx: int) -> Arc:
        q = self.cf.q
        orbit = self.orbit(idx + q(M))
        return _atom_arc(orbit, idx, q(M), _orbit_direction(M))

    def range_arc(self, m: int, j: int, k_lo: int, k_hi: int) -> Arc:
        q = self.cf.q
        a = q(m) + k_lo * q(m + 1) + j
        b = q(m) + (k_hi + 1) * q(m + 1) + j
        orbit = self.orbit(max(a, b))
        if _orbit_direction(m + 1) > 0:
            return Arc(orbit[a], orbit[b], a, b)
        return Arc(orbit[b], orbit[a], b, a)

    # -- atom factories ----------------------------------------------------
    def make_plain(self, case, prov, M, idx, parent=-1) -> GridAtom:
        if self.cf.depth < M:
            raise GridInvalid(
                f"partition level {M} exceeds the continued-fraction depth "
                f"{self.cf.depth}; expand the rotation number further")
        return GridAtom(case=case, shape="plain", prov_level=prov, M=M,
                        idx=idx, parent=parent, arc=self.plain_arc(M, idx))

    def make_range(self, case, prov, m, spot_i, j, k_lo, k_hi,
                   host_lo, host_hi, depth_i=-1, final_central=False,
                   whole_bridge=False, parent=-1) -> GridAtom:
        if k_lo == k_hi and not whole_bridge:
            # single Delta blocks are plain long atoms one level deeper
            q = self.cf.q
            return self.make_plain(case, prov, m + 1,
                                   q(m) + k_lo * q(m + 1) + j, parent)
        return GridAtom(case=case, shape="range", prov_level=prov, m=m,
                        spot_i=spot_i, idx=j, k_lo=k_lo, k_hi=k_hi,
                        host_lo=host_lo, host_hi=host_hi, depth_i=depth_i,
                        final_central=final_central,
                        whole_bridge=whole_bridge, parent=parent,
                        arc=self.range_arc(m, j, k_lo, k_hi))

    # -- splitting ----------------------------------------------------------
    def star_split(self, atom: GridAtom, parent_index: int) -> list:
        """Case (1): star decomposition of a plain long atom I_M^idx."""
        M, idx = atom.M, atom.idx
        times, a_next = self.times(M)
        q = self.cf.q
        tlist = list(times) + [a_next]
        out = []
        for i, k in enumerate(times):
            out.append(self.make_plain("b1", M, M + 1,
                                       q(M) + k * q(M + 1) + idx, parent_index))
            lo, hi = k + 1, tlist[i + 1] - 1
            if lo <= hi:
                out.append(self.make_range("b1", M, M, i, idx, lo, hi,
                                           lo, hi, whole_bridge=(hi > lo),
                                           parent=parent_index))
        out.append(self.make_plain("b1", M, M + 2, idx, parent_index))
        return out

    def split(self, atom: GridAtom, parent_index: int) -> list:
        if atom.shape == "plain":
            return self.star_split(atom, parent_index)
        count = atom.n_units
        m, j, i = atom.m, atom.idx, atom.spot_i
        if atom.whole_bridge:
            if count >= self.sn_threshold:
                # saddle-node: L0 | M1 | R0 of the balanced decomposition
                return [
                    self.make_range("b1", m, m, i, j, atom.k_lo, atom.k_lo,
                                    atom.k_lo, atom.k_hi, parent=parent_index),
                    self.make_range("b2", m, m, i, j, atom.k_lo + 1,
                                    atom.k_hi - 1, atom.k_lo, atom.k_hi,
                                    depth_i=1,
                                    final_central=(
                                        balanced_decomposition(count).depth == 0),
                                    parent=parent_index),
                    self.make_range("b1", m, m, i, j, atom.k_hi, atom.k_hi,
                                    atom.k_lo, atom.k_hi, parent=parent_index),
                ]
            # regular bridge: break into constituent atoms
            return [
                self.make_range("b1", m, m, i, j, k, k, atom.host_lo,
                                atom.host_hi, parent=parent_index)
                for k in range(atom.k_lo, atom.k_hi + 1)
            ]
        if atom.case == "b2" and not atom.final_central:
            # case (3): next central interval plus laterals
            dec = balanced_decomposition(atom.host_hi - atom.host_lo + 1)
            di = atom.depth_i
            if not 1 <= di <= dec.depth:
                raise GridInvalid(f"central depth {di} out of range")
            off = atom.host_lo - 1  # chain nu=1 sits at k=host_lo
            (l_lo, l_hi) = dec.laterals_left[di]
            (r_lo, r_hi) = dec.laterals_right[di]
            (c_lo, c_hi) = dec.central[di + 1]
            return [
                self.make_range("b3" if l_hi > l_lo else "b1", m, m, i, j,
                                off + l_lo, off + l_hi, atom.host_lo,
                                atom.host_hi, parent=parent_index),
                self.make_range("b2", m, m, i, j, off + c_lo, off + c_hi,
                                atom.host_lo, atom.host_hi, depth_i=di + 1,
                                final_central=(di + 1 == dec.depth + 1),
                                parent=parent_index),
                self.make_range("b3" if r_hi > r_lo else "b1", m, m, i, j,
                                off + r_lo, off + r_hi, atom.host_lo,
                                atom.host_hi, parent=parent_index),
            ]
        # case (4): halve a lateral block (or the final central interval)
        if count < 2:
            raise GridInvalid("range atom with a single unit escaped "
                              "normalization")
        half = count // 2
        mk = lambda lo, hi: self.make_range(
            "b3" if hi > lo else "b1", m, m, i, j, lo, hi,
            atom.host_lo, atom.host_hi, parent=parent_index)
        return [mk(atom.k_lo, atom.k_lo + half - 1),
                mk(atom.k_lo + half, atom.k_hi)]

    def base_level(self) -> FineGridLevel:
        """Q_1: the level-1 auxiliary partition with saddle-node bridges
        pre-split into L0 | M1 | R0."""
        q = self.cf.q
        times, a_next = self.times(1)
        tlist = list(times) + [a_next]
        atoms = []
        for j in range(q(2)):
            for i, k in enumerate(times):
                atoms.append(self.make_plain("b1", 1, 2, q(1) + k * q(2) + j))
                lo, hi = k + 1, tlist[i + 1] - 1
                if lo <= hi:
                    bridge = self.make_range("b1", 1, 1, i, j, lo, hi, lo, hi,
                                             whole_bridge=(hi > lo))
                    if bridge.shape == "range" and bridge.n_units >= self.sn_threshold:
                        atoms.extend(self.split(bridge, -1))
                    else:
                        atoms.append(bridge)
            atoms.append(self.make_plain("b1", 1, 3, j))
        for ell in range(q(1)):
            atoms.append(self.make_plain("b1", 1, 2, ell))
        return FineGridLevel(level=1, atoms=atoms)

    def next_level(self, prev: FineGridLevel) -> FineGridLevel:
        atoms = []
        cmax = 0
        for pi, atom in enumerate(prev.atoms):
            children = self.split(atom, pi)
            cmax = max(cmax, len(children))
            atoms.extend(children)
        return FineGridLevel(level=prev.level + 1, atoms=atoms,
                             children_max=cmax)


def build_grid(circle_map: CircleMap, c0, cf: ContinuedFraction, n_max: int,
               sn_threshold: int = SADDLE_NODE_THRESHOLD) -> list:
    """Grid levels Q_1..Q_{n_max}."""
    builder = GridBuilder(circle_map, c0, cf, sn_threshold)
    levels = [builder.base_level()]
    while levels[-1].level < n_max:
        levels.append(builder.next_level(levels[-1]))
    return levels


def classify_aux_atoms(aux, sn_threshold: int = SADDLE_NODE_THRESHOLD):
    """Tag every atom of an auxiliary partition regular vs saddle-node.

    Only bridges with at least ``sn_threshold`` constituent atoms are
    saddle-node; spots, deep and short atoms are always regular.
    """
    tags = []
    for atom in aux.atoms:
        if atom.kind == "bridge" and atom.k_hi - atom.k_lo + 1 >= max(sn_threshold, 4):
            tags.append("saddle-node")
        else:
            tags.append("regular")
    return tags


@dataclass(frozen=True)
class GridValidation:
    n_levels: int
    a_observed: int                 # max children per atom over all splits
    rho_observed: mpf               # max adjacent-atom ratio over all levels
    rho_per_level: tuple
    alpha: mpf                      # (a rho^(a-1))^-1 from observed constants
    beta: mpf                       # (1 + rho^-1)^-1
    case_counts: dict


def validate_grid(levels: list, prec: int = 256) -> GridValidation:
    """Check the defining grid conditions and derive the envelope
    constants from the observed (a, rho).

    Raises GridInvalid on: a non-splitting atom (refinement not strict),
    a child not inside its parent, a parent/child length ratio outside
    [alpha, beta], or an unclassified atom.
    """
    if len(levels) < 2:
        raise GridInvalid("need at least two levels to validate")
    with mp.workprec(prec):
        a_obs = max(lv.children_max for lv in levels[1:])
        rho_levels = []
        case_counts = {"b1": 0, "b2": 0, "b3": 0}
        for lv in levels:
            for atom in lv.atoms:
                if atom.case not in case_counts:
                    raise GridInvalid(f"atom with unknown case {atom.case!r}")
                case_counts[atom.case] += 1
            order = lv.sorted_atoms()
            worst = mpf(1)
            for p in range(len(order)):
                a1 = lv.atoms[order[p]]
                a2 = lv.atoms[order[(p + 1) % len(order)]]
                r = a1.arc.length / a2.arc.length
                worst = max(worst, r, 1 / r)
            rho_levels.append(worst)
        rho_obs = max(rho_levels)
        alpha = 1 / (a_obs * rho_obs ** (a_obs - 1))
        beta = 1 / (1 + 1 / rho_obs)
        # strictness, containment, and the parent/child envelope
        for li in range(1, len(levels)):
            prev, cur = levels[li - 1], levels[li]
            child_count = [0] * len(prev.atoms)
            for atom in cur.atoms:
                if atom.parent < 0:
                    raise GridInvalid("child atom without a parent")
                child_count[atom.parent] += 1
                parc = prev.atoms[atom.parent].arc
                if ccw_span(parc.left, atom.arc.left) > parc.length or \
                   ccw_span(parc.left, atom.arc.right) > parc.length:
                    raise GridInvalid(
                        f"level {cur.level}: child not inside its parent")
                ratio = atom.arc.length / parc.length
                pad = mpf(2) ** (64 - prec)  # rounding slack at the boundary
                if not alpha * (1 - pad) <= ratio <= beta * (1 + pad):
                    raise GridInvalid(
                        f"level {cur.level}: parent/child ratio "
                        f"{mp.nstr(ratio, 8)} outside "
                        f"[{mp.nstr(alpha, 8)}, {mp.nstr(beta, 8)}]")
            if any(c < 2 for c in child_count):
                raise GridInvalid(
                    f"level {cur.level}: refinement is not strict")
        return GridValidation(
            n_levels=len(levels), a_observed=a_obs, rho_observed=rho_obs,
            rho_per_level=tuple(rho_levels), alpha=alpha, beta=beta,
            case_counts=case_counts)
