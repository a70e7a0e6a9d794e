"""Loops as words in oriented path letters, and retrace (free) reduction.

A letter names a path in a shared segment table together with an
orientation.  Two adjacent letters cancel when they are exact inverses
(same path, opposite orientation) or when the second one traces the first
backwards up to a change of speed, decided by :func:`match_up_to_reparam`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import PolicyError
from .loopcore import AmbientSpace, Loop, Segment, from_segments, restrict, reverse, trivial_loop
from .loopcore.io import dumps
from .loopcore.segments import segment_from_dict

SPLIT_POLICIES = ("breakpoints", "breakpoints_and_turning_points")
VERDICTS = ("trivial_certificate", "not_reduced", "inconclusive")
CHAIN_TOL = 1e-12
MATCH_TOL = 1e-6
MATCH_SAMPLES = 4096


@dataclass(frozen=True, order=True)
class Letter:
    segment_id: int
    orientation: int = 1

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    def inverse(self) -> "Letter":
        return Letter(self.segment_id, -self.orientation)

    def __str__(self):
        return f"s{self.segment_id}" + ("" if self.orientation > 0 else "^-1")


class SegmentTable:
    """Read-only table of paths with cached endpoints."""

    def __init__(self, segments: Sequence[Segment]):
        self.segments = tuple(segments)
        self._ends = [(s.start(), s.end()) for s in self.segments]
        self._paths: dict[Letter, Segment] = {}
        self._chain: dict[tuple[Letter, Letter], bool] = {}

    def __len__(self):
        return len(self.segments)

    def path(self, letter: Letter) -> Segment:
        p = self._paths.get(letter)
        if p is None:
            seg = self.segments[letter.segment_id]
            p = seg if letter.orientation > 0 else reverse(seg)
            self._paths[letter] = p
        return p

    def start(self, letter: Letter) -> np.ndarray:
        a, b = self._ends[letter.segment_id]
        return a if letter.orientation > 0 else b

    def end(self, letter: Letter) -> np.ndarray:
        a, b = self._ends[letter.segment_id]
        return b if letter.orientation > 0 else a

    def chains(self, first: Letter, second: Letter) -> bool:
        key = (first, second)
        ok = self._chain.get(key)
        if ok is None:
            x, y = self.end(first), self.start(second)
            ok = bool(np.all(np.abs(x - y) <= CHAIN_TOL * np.maximum(1.0, np.abs(y))))
            self._chain[key] = ok
        return ok


@dataclass(frozen=True, eq=False)
class Word:
    letters: tuple
    table: SegmentTable
    space: AmbientSpace = field(default_factory=lambda: AmbientSpace(2))

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        n = len(self.table)
        for k, l in enumerate(self.letters):
            if not 0 <= l.segment_id < n:
                raise ValueError(f"letter {k} refers to a missing segment {l.segment_id}")
        for k, (a, b) in enumerate(zip(self.letters, self.letters[1:])):
            if not self.table.chains(a, b):
                raise ValueError(f"letters {k} and {k + 1} do not chain")

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return " ".join(str(l) for l in self.letters) if self.letters else "<empty>"

    @property
    def is_empty(self) -> bool:
        return not self.letters

    @property
    def closed(self) -> bool:
        if not self.letters:
            return True
        p = self.space.p
        return np.allclose(self.table.start(self.letters[0]), p, atol=CHAIN_TOL) and np.allclose(
            self.table.end(self.letters[-1]), p, atol=CHAIN_TOL
        )

    def paths(self) -> list[Segment]:
        return [self.table.path(l) for l in self.letters]

    def inverse(self) -> "Word":
        return Word(tuple(l.inverse() for l in reversed(self.letters)), self.table, self.space)

    def same_letters(self, other: "Word") -> bool:
        return self.letters == other.letters

    def to_dict(self) -> dict:
        return {
            "letters": [[l.segment_id, l.orientation] for l in self.letters],
            "segment_table": [s.to_dict() for s in self.table.segments],
        }


def word_from_dict(d: dict, space: AmbientSpace | None = None) -> Word:
    table = SegmentTable([segment_from_dict(s) for s in d["segment_table"]])
    letters = tuple(Letter(int(i), int(o)) for i, o in d["letters"])
    return Word(letters, table, space or AmbientSpace(table.segments[0].dimension if len(table) else 2))


def word_to_json(word: Word) -> str:
    return dumps(word.to_dict())


def word_to_loop(word: Word, label: str | None = None) -> Loop:
    """Concatenate the letters with equal parameter widths; the empty word is the trivial loop."""
    if word.is_empty:
        return trivial_loop(word.space, label or "trivial")
    return from_segments(word.space, word.paths(), label=label)


def _turning_points(seg: Segment, tol: float) -> list[float]:
    z = seg.stationary(tol)
    if z.intervals:
        raise PolicyError("velocity vanishes on an interval inside a segment; turning points are not isolated")
    return sorted(float(x) for x in z.points if 0.0 < x < 1.0)


def to_word(gamma: Loop, split_policy: str = "breakpoints", tol: float = 1e-10) -> Word:
    """Letters for every non-constant piece of ``gamma``, in parameter order.

    With ``breakpoints_and_turning_points`` each segment is further cut at the
    isolated interior zeros of its velocity, so an out-and-back arc becomes
    two letters.
    """
    if split_policy not in SPLIT_POLICIES:
        raise PolicyError(f"unknown split policy {split_policy!r}")
    pieces: list[Segment] = []
    for seg in gamma.segments:
        if seg.is_constant:
            continue
        cuts = [0.0, 1.0]
        if split_policy == "breakpoints_and_turning_points":
            cuts = [0.0] + _turning_points(seg, tol) + [1.0]
        for a, b in zip(cuts, cuts[1:]):
            piece = restrict(seg, a, b)
            if not piece.is_constant:
                pieces.append(piece)
    table = SegmentTable(pieces)
    return Word(tuple(Letter(k, 1) for k in range(len(pieces))), table, gamma.space)


# ---------------------------------------------------------------------------
# matching


def arclength_trace(path, samples: int = MATCH_SAMPLES) -> np.ndarray | None:
    """Positions at equally spaced normalized arc length, or None for zero length.

    ``path`` maps an array of parameters in [0, 1] to positions ``(P, n)``.
    Arc length is the cumulative chord length over ``samples`` cells; the
    inverse is resampled with a monotone cubic and evaluated exactly.
    """
    tau = np.linspace(0.0, 1.0, samples + 1)
    x = path(tau)
    chord = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(x, axis=0), axis=1))])
    total = chord[-1]
    if not total > 0.0:
        return None
    s = chord / total
    keep = np.concatenate([[True], np.diff(s) > 1e-14])
    s, tau = s[keep], tau[keep]
    s[-1] = 1.0
    if s.size < 2:
        return None
    u = np.linspace(0.0, 1.0, samples + 1)
    t_of_u = np.clip(PchipInterpolator(s, tau)(u), 0.0, 1.0)
    return path(t_of_u)


def match_paths(path1, path2, tol: float = MATCH_TOL, samples: int = MATCH_SAMPLES) -> bool:
    """Arc-length comparison of two parametrized paths given as callables."""
    ends1 = path1(np.array([0.0, 1.0]))
    ends2 = path2(np.array([0.0, 1.0]))
    if np.max(np.abs(ends1 - ends2)) >= tol:
        return False
    a = arclength_trace(path1, samples)
    b = arclength_trace(path2, samples)
    if a is None or b is None:
        return a is None and b is None
    return bool(np.max(np.linalg.norm(a - b, axis=1)) < tol)


def match_up_to_reparam(s1: Segment, s2: Segment, tol: float = MATCH_TOL, samples: int = MATCH_SAMPLES) -> bool:
    """Do ``s1`` and ``s2`` trace the same oriented curve, ignoring speed?"""
    if s1.is_constant or s2.is_constant:
        if s1.is_constant and s2.is_constant:
            return bool(np.max(np.abs(s1.start() - s2.start())) < tol)
        return False
    return match_paths(s1.value, s2.value, tol, samples)


# ---------------------------------------------------------------------------
# reduction


@dataclass(frozen=True, eq=False)
class Reduction:
    word: Word
    cancellations: tuple  # (i, j) index pairs into the input word, in cancellation order

    def log(self) -> str:
        lines = [f"cancel {i} {j}" for i, j in self.cancellations]
        lines.append(f"remaining: {self.word}")
        return "\n".join(lines) + "\n"


def reduce_with_certificate(
    word: Word, tol: float = MATCH_TOL, samples: int = MATCH_SAMPLES, exact_only: bool = False
) -> Reduction:
    """Stack-based free reduction recording which letter pairs cancelled."""
    memo: dict[tuple[Letter, Letter], bool] = {}

    def cancels(a: Letter, b: Letter) -> bool:
        if a.segment_id == b.segment_id:
            return a.orientation == -b.orientation
        if exact_only:
            return False
        key = (a, b)
        hit = memo.get(key)
        if hit is None:
            hit = match_up_to_reparam(word.table.path(b), reverse(word.table.path(a)), tol, samples)
            memo[key] = hit
        return hit

    stack: list[tuple[int, Letter]] = []
    pairs = []
    for j, letter in enumerate(word.letters):
        if stack and cancels(stack[-1][1], letter):
            i, _ = stack.pop()
            pairs.append((i, j))
        else:
            stack.append((j, letter))
    out = Word(tuple(l for _, l in stack), word.table, word.space)
    return Reduction(out, tuple(pairs))


def reduce(word: Word, tol: float = MATCH_TOL, samples: int = MATCH_SAMPLES, exact_only: bool = False) -> Word:
    """Cancel adjacent letter pairs ``l . l'`` where ``l'`` retraces ``l``, until none remain."""
    return reduce_with_certificate(word, tol, samples, exact_only).word


@dataclass(frozen=True, eq=False)
class RetraceVerdict:
    verdict: str
    cancellations: tuple = ()
    word: Word | None = None
    reduced: Word | None = None
    note: str = ""

    @property
    def n_cancellations(self) -> int:
        return len(self.cancellations)

    def log(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        if self.word is not None:
            lines.append(f"letters: {len(self.word)}")
        lines += [f"cancel {i} {j}" for i, j in self.cancellations]
        if self.reduced is not None:
            lines.append(f"remaining: {self.reduced}")
        if self.note:
            lines.append(f"note: {self.note}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "cancellations": [list(p) for p in self.cancellations],
            "letters": None if self.word is None else len(self.word),
            "remaining": None if self.reduced is None else self.reduced.to_dict()["letters"],
            "note": self.note,
        }


def is_retrace_trivial(
    gamma: Loop, tol: float = MATCH_TOL, samples: int = MATCH_SAMPLES, root_tol: float = 1e-10
) -> RetraceVerdict:
    """Split at turning points and reduce; an empty result is a retrace certificate.

    A nonempty reduced word is reported as ``not_reduced``, which says nothing
    about whether the loop is thin.
    """
    try:
        w = to_word(gamma, "breakpoints_and_turning_points", root_tol)
    except PolicyError as exc:
        return RetraceVerdict("inconclusive", note=str(exc))
    r = reduce_with_certificate(w, tol, samples)
    verdict = "trivial_certificate" if r.word.is_empty else "not_reduced"
    return RetraceVerdict(verdict, r.cancellations, w, r.word)
