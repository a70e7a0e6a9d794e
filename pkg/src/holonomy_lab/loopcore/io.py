"""JSON and CSV round-tripping for loops.

Floats are written with ``repr`` (shortest round-trip decimal), so reading a
document back reproduces every stored value bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .loop import AmbientSpace, Loop
from .segments import segment_from_dict


def loop_to_dict(loop: Loop, word: dict | None = None) -> dict:
    d = {
        "space": {"dim": loop.space.dimension, "basepoint": list(loop.space.basepoint)},
        "breakpoints": list(loop.breakpoints),
        "segments": [s.to_dict() for s in loop.segments],
        "label": loop.label,
    }
    if word is not None:
        d["word"] = word
    return d


def loop_from_dict(d: dict) -> Loop:
    space = AmbientSpace(int(d["space"]["dim"]), tuple(d["space"]["basepoint"]))
    segs = tuple(segment_from_dict(s) for s in d["segments"])
    return Loop(space, tuple(float(x) for x in d["breakpoints"]), segs, d.get("label"))


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def loop_to_json(loop: Loop, word: dict | None = None) -> str:
    return dumps(loop_to_dict(loop, word))


def loop_from_json(text: str) -> Loop:
    """Parse a loop document, or a report that embeds one under ``"loop"``."""
    d = json.loads(text)
    if "segments" not in d and isinstance(d.get("loop"), dict):
        d = d["loop"]
    return loop_from_dict(d)


def read_loop(path) -> Loop:
    with open(path, encoding="utf-8") as fh:
        return loop_from_json(fh.read())


def write_loop(loop: Loop, path, word: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(loop_to_json(loop, word))
