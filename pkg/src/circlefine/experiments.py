"""Composite experiments: map construction recipes, second-critical-point
gap tuning, and the quasisymmetry contrast experiment.

The contrast experiment compares two bicritical maps with the same
rotation number.  The reference map is symmetric under x -> x + 1/2, so
its invariant measure splits the two critical points' gap exactly in
half.  The probe map has its second critical point *placed* so that its
measure gap either matches (1/2) or deliberately mismatches (1/2 - delta)
the reference.  Placement inverts the semiconjugacy: the target measure
coordinate is bracketed between consecutive orbit points, and the
critical point is dropped in the middle of that spatial bracket, which
certifies the gap to the bracket's measure width.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from mpmath import mp, mpf

from .conjugacy import (
    ConjugacyTable,
    build_conjugacy,
    measure_frame,
    qs_profile,
    qs_scan,
)
from .errors import NotBracketed, NotConverged
from .geometry import frac
from .maps import (
    CanonicalSpec,
    CircleMap,
    PiecewiseCanonical,
    SineFamily,
    TuneResult,
    tune_omega,
)
from .rotation import ContinuedFraction, cf_value, expand, periodic_value


def contrast_rotation_number(prec: int = 256):
    """Rotation number with growing quotients [2,4,8,16,32] and tail 5:
    every observable level carries bridges, and q_7 ~ 1.0e6 puts the
    measure-frame gap under 1e-6."""
    tail = periodic_value([5], prec=prec + 16)
    return cf_value([2, 4, 8, 16, 32], tail, prec=prec)


def symmetric_bicritical(prec: int = 256, window="0.04", slope="1.0",
                         exponent="3") -> PiecewiseCanonical:
    """Bicritical map commuting with x -> x + 1/2, hence measure gaps
    exactly (1/2, 1/2)."""
    return PiecewiseCanonical(
        [CanonicalSpec("0.0", exponent, window, slope),
         CanonicalSpec("0.5", exponent, window, slope)], 0, prec)


def probe_bicritical(c1_position, prec: int = 256) -> PiecewiseCanonical:
    """Asymmetric bicritical template with an adjustable second critical
    point; exponents match the symmetric reference."""
    return PiecewiseCanonical(
        [CanonicalSpec("0.0", "3", "0.05", "1.0"),
         CanonicalSpec(c1_position, "3", "0.03", "2.0")], 0, prec)


@dataclass
class GapTuneResult:
    map: CircleMap
    tune: TuneResult
    c1_position: float
    gap_value: float        # measured psi(c_1)
    gap_halfwidth: float    # certified half-width of the bracket
    iterations: int


def _orbit_budget(cf: ContinuedFraction, M: int) -> int:
    """Smallest return time q_n >= M: tuning to that depth certifies the
    circular order of the first M orbit points."""
    for n in range(1, cf.depth + 1):
        if cf.q(n) >= M:
            return cf.q(n)
    raise ValueError(f"continued fraction too shallow for M = {M}")


def tune_second_critical(make_map, rho, target_gap: float,
                         tol: float = 1e-6, stages=(20000, 200000),
                         final_M: int | None = None,
                         max_iterations: int = 12,
                         omega_window: float = 1e-3,
                         prec: int = 256) -> GapTuneResult:
    """Place the second critical point so mu[c_0, c_1) hits ``target_gap``.

    ``make_map``(c1_position_string) must build the bicritical template.
    Each round tunes omega, builds a measure frame of growing size, finds
    the orbit gap straddling the target coordinate, and drops c_1 at its
    spatial midpoint; the certified error is the measure width of that
    gap.  Rounds repeat (placement perturbs the map slightly) until the
    bracket certifies |gap - target| <= tol.
    """
    cf = expand(rho, 20, prec=prec)
    schedule = list(stages) + [final_M or stages[-1]]
    # initial guess: put c_1 at the naive spatial position
    c1 = float(target_gap)
    omega_bracket = (0, 1)
    tune = None
    last = None
    for it in range(max_iterations):
        M = schedule[min(it, len(schedule) - 1)]
        template = make_map(mp.nstr(mpf(c1), 50))
        try:
            tune = tune_omega(template, rho, tol=mpf("1e-40"),
                              max_orbit=_orbit_budget(cf, M),
                              omega_bracket=omega_bracket)
        except NotBracketed:
            tune = tune_omega(template, rho, tol=mpf("1e-40"),
                              max_orbit=_orbit_budget(cf, M))
        g = tune.map
        omega_bracket = (max(0.0, float(tune.omega) - omega_window),
                         min(1.0, float(tune.omega) + omega_window))
        frame = measure_frame(g, rho, M)
        # locate the psi-gap straddling the target
        order = np.argsort(frame.psi)
        psi_sorted = frame.psi[order]
        xs_by_psi = frame.xs[order]
        i = int(np.searchsorted(psi_sorted, float(target_gap))) % M
        psi_lo = float(psi_sorted[i - 1])
        psi_hi = float(psi_sorted[i])
        gap_w = (psi_hi - psi_lo) % 1.0
        x_lo = float(xs_by_psi[i - 1])
        x_hi = float(xs_by_psi[i])
        # current certified position of psi(c1): its own bracket
        lo_c, w_c = frame.bracket(c1 % 1.0)
        cur_mid = (lo_c + w_c / 2) % 1.0
        err_now = abs((cur_mid - float(target_gap) + 0.5) % 1.0 - 0.5) + w_c / 2
        last = (c1, cur_mid, w_c / 2, it + 1)
        if err_now <= tol:
            return GapTuneResult(map=g, tune=tune, c1_position=c1,
                                 gap_value=cur_mid, gap_halfwidth=err_now,
                                 iterations=it + 1)
        # re-place c_1 at the middle of the straddling spatial gap
        c1 = float((x_lo + ((x_hi - x_lo) % 1.0) / 2) % 1.0)
        if gap_w > 2 * tol and M >= schedule[-1]:
            raise NotConverged(
                f"measure frame gap {gap_w:.2e} too wide to certify "
                f"tolerance {tol:g}; increase the frame size")
    raise NotConverged(
        f"gap tuning did not certify after {max_iterations} rounds; "
        f"last state {last}")


@dataclass
class ContrastExperiment:
    rho: mpf
    cf: ContinuedFraction
    reference: TuneResult
    matched: GapTuneResult
    mismatched: GapTuneResult
    table_matched: ConjugacyTable
    table_mismatched: ConjugacyTable
    matched_scan: object
    mismatch_profile: list
    matched_profile: list


def default_scales():
    """Decade scales spanning [2^-20, 2^-4]."""
    top = 2.0**-4
    return [top, top / 10, top / 100, top / 1000, top / 10**4, 2.0**-20]


def default_x_grid(maps, n_random: int = 48, seed: int = 0):
    """Scan grid: seeded uniforms plus critical points, critical values,
    and a few forward images (where distortion concentrates)."""
    import random as _random
    rng = _random.Random(seed)
    pts = [rng.random() for _ in range(n_random)]
    for m in maps:
        for cp in m.critical_points:
            x = float(cp.position)
            pts.append(x)
            y = x
            for _ in range(3):
                y = float(m(y))
                pts.append(y)
    return [p % 1.0 for p in pts]


def run_contrast_experiment(M_conj: int, frame_M: int, gap_tol: float = 1e-6,
                            mismatch_delta: float = 0.06, prec: int = 256,
                            scales=None, n_random: int = 48,
                            seed: int = 0) -> ContrastExperiment:
    """The full matched-vs-mismatched quasisymmetry experiment."""
    rho = contrast_rotation_number(prec)
    cf = expand(rho, 16, prec=prec)
    scales = scales or default_scales()
    f_template = symmetric_bicritical(prec)
    f_tune = tune_omega(f_template, rho, tol=mpf("1e-40"),
                        max_orbit=_orbit_budget(cf, M_conj))
    f = f_tune.map

    matched = tune_second_critical(
        lambda c1: probe_bicritical(c1, prec), rho, 0.5, tol=gap_tol,
        stages=(20000, 200000), final_M=frame_M)
    mismatched = tune_second_critical(
        lambda c1: probe_bicritical(c1, prec), rho, 0.5 - mismatch_delta,
        tol=gap_tol, stages=(20000, 200000), final_M=frame_M)

    table_m = build_conjugacy(f, matched.map, M_conj, rho)
    table_x = build_conjugacy(f, mismatched.map, M_conj, rho)

    grid = default_x_grid([f, matched.map], n_random=n_random, seed=seed)
    scan_m = qs_scan(table_m, grid, scales)
    c1f = float(f.critical_points[1].position)
    prof_x = qs_profile(table_x, c1f, scales)
    prof_m = qs_profile(table_m, c1f, scales)
    return ContrastExperiment(
        rho=rho, cf=cf, reference=f_tune, matched=matched,
        mismatched=mismatched, table_matched=table_m,
        table_mismatched=table_x, matched_scan=scan_m,
        mismatch_profile=prof_x, matched_profile=prof_m)
