"""Finite descriptions of closed subsets of [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass, field

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class ClosedSetDescription:
    intervals: tuple = ()
    isolated_points: tuple = ()
    tolerance: float = 1e-10
    exactness_flag: str = "exact"
    truncation_note: str = ""

    @property
    def exact(self) -> bool:
        return self.exactness_flag == "exact"

    def contains(self, t: float, tol: float = 0.0) -> bool:
        if any(a - tol <= t <= b + tol for a, b in self.intervals):
            return True
        return any(abs(t - p) <= tol for p in self.isolated_points)

    @property
    def is_everything(self) -> bool:
        return len(self.intervals) == 1 and self.intervals[0] == (0.0, 1.0)

    def components(self) -> list[tuple]:
        """Connected components in increasing order: ``(a, a)`` for points."""
        items = [(a, b) for a, b in self.intervals] + [(p, p) for p in self.isolated_points]
        return sorted(items)

    def complement_components(self) -> list[tuple[float, float]]:
        """Open intervals making up ``[0, 1]`` minus the set, in order."""
        comps = self.components()
        out = []
        for (a0, b0), (a1, b1) in zip(comps, comps[1:]):
            if a1 > b0:
                out.append((b0, a1))
        return out

    def to_dict(self) -> dict:
        return {
            "intervals": [list(iv) for iv in self.intervals],
            "isolated_points": list(self.isolated_points),
            "tolerance": self.tolerance,
            "exactness_flag": self.exactness_flag,
            "truncation_note": self.truncation_note,
        }


def normalize(intervals, points, tolerance, exact, note="", merge_tol=MERGE_TOL) -> ClosedSetDescription:
    """Merge touching intervals, absorb points, deduplicate."""
    ivs = sorted((float(a), float(b)) for a, b in intervals)
    merged: list[list[float]] = []
    for a, b in ivs:
        if merged and a <= merged[-1][1] + merge_tol:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    pts = []
    for p in sorted(float(x) for x in points):
        if any(a - merge_tol <= p <= b + merge_tol for a, b in merged):
            continue
        if pts and p - pts[-1] <= merge_tol:
            continue
        pts.append(p)
    return ClosedSetDescription(
        intervals=tuple((a, b) for a, b in merged),
        isolated_points=tuple(pts),
        tolerance=tolerance,
        exactness_flag="exact" if exact else "numeric",
        truncation_note=note,
    )
