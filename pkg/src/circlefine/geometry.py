"""Circle arithmetic and oriented arcs.

Points live on R/Z and are represented by mpf values in [0, 1).  All
helpers run at the caller's ambient mpmath precision.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpf


def frac(x):
    """x mod 1 in [0, 1)."""
    return x - mp.floor(x)


def ccw_span(a, b):
    """Counterclockwise distance from a to b, in [0, 1)."""
    return frac(b - a)


def circle_dist(a, b):
    """Shorter-arc distance between two circle points."""
    d = frac(b - a)
    return d if d <= mpf("0.5") else 1 - d


@dataclass(frozen=True)
class Arc:
    """Closed oriented arc: counterclockwise from ``left`` to ``right``.

    Endpoints may carry orbit indices (iterate counts of a base point) so
    that combinatorial checks can be done on integers instead of floats.
    """

    left: mpf
    right: mpf
    left_index: int | None = None
    right_index: int | None = None

    @property
    def length(self):
        return ccw_span(self.left, self.right)

    def contains(self, x, fatten=0) -> bool:
        """Whether x lies on the closed arc, optionally fattened by
        ``fatten`` times the arc length at both ends."""
        ln = self.length
        pad = fatten * ln
        t = frac(x - self.left)
        if t <= ln + pad:
            return True
        return t >= 1 - pad

    def interior_contains(self, x) -> bool:
        t = frac(x - self.left)
        return 0 < t < self.length

    def midpoint(self):
        return frac(self.left + self.length / 2)

    def sample(self, k: int):
        """k interior points, equally spaced."""
        ln = self.length
        return [frac(self.left + ln * mpf(i) / (k + 1)) for i in range(1, k + 1)]

    def overlaps_interior(self, other: "Arc") -> bool:
        """True when the two arcs share interior points."""
        # Cut the circle at self.left: self covers (0, La), other covers
        # (t, t+Lb) possibly wrapping past 1.
        t = frac(other.left - self.left)
        return t < self.length or t + other.length > 1


def sort_circular(points):
    """Indices of ``points`` sorted counterclockwise starting from the
    smallest representative in [0,1)."""
    return sorted(range(len(points)), key=lambda i: points[i])
