"""Grid-pattern DSL: grammar constants, program validity, rendering, consistency.

A program is a fixed-length sequence of 12 production choices, one per
nonterminal, in the order ``NONTERMINALS``. It draws a rectangular box on a
7x7 grid: an outer ring of width ``Thickness`` filled with the outside
object, a strict interior filled with the inside object, and a colour rule
``A2(A1(x, y))`` applied to every non-pebble cell. Pebbles are colourless
and carry the canonical colour index 0.

Coordinates: ``x`` is the column, ``y`` is the row, origin at the top-left.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

GRID_SIZE = 7

NONTERMINALS = (
    "Program",
    "Shape",
    "Left",
    "Right",
    "Top",
    "Bottom",
    "Thickness",
    "O",
    "I",
    "Colour",
    "A1",
    "A2",
)

ARITIES = (1, 1, 7, 7, 7, 7, 3, 2, 3, 1, 3, 6)

N_NONTERMINALS = len(NONTERMINALS)
MAX_ARITY = max(ARITIES)

# Choice-vector positions.
I_LEFT, I_RIGHT, I_TOP, I_BOTTOM, I_THICK = 2, 3, 4, 5, 6
I_OUT, I_IN, I_A1, I_A2 = 7, 8, 10, 11

OBJECTS = ("chicken", "pig", "pebble")
CHICKEN, PIG, PEBBLE = 0, 1, 2
COLOURS = ("red", "green", "blue")
EMPTY = -1

RULE_LABELS = (
    ("<Shape, Colour>",),
    ("Box(Left, Right, Top, Bottom, Thickness, O, I)",),
    tuple(str(v) for v in range(7)),
    tuple(str(v) for v in range(7)),
    tuple(str(v) for v in range(7)),
    tuple(str(v) for v in range(7)),
    ("1", "2", "3"),
    ("chicken", "pig"),
    ("chicken", "pig", "pebble"),
    ("[red, green, blue][A2(A1)]",),
    ("x", "y", "x+y"),
    ("z:0", "z:1", "z:2", "z:z%2", "z:z%2+1", "z:2*(z%2)"),
)

# A2 rule value for every argument z in 0..12 (x+y ranges up to 12).
_A2_TABLE = np.array(
    [[0] * 13, [1] * 13, [2] * 13]
    + [[f(z) for z in range(13)] for f in (lambda z: z % 2, lambda z: z % 2 + 1, lambda z: 2 * (z % 2))],
    dtype=np.int8,
)


@dataclass(frozen=True)
class Utterance:
    """One revealed cell: position, object, and colour.

    Pebbles are colourless; their colour field is canonicalized to 0 at
    construction so that two reveals of the same pebble compare equal.
    """

    x: int
    y: int
    obj: int
    colour: int

    def __post_init__(self) -> None:
        if self.obj == PEBBLE and self.colour != 0:
            object.__setattr__(self, "colour", 0)

    @property
    def cell(self) -> tuple[int, int]:
        return (self.x, self.y)

    def sort_key(self) -> tuple[int, int, int, int]:
        # Canonical ordering used for alphabets and tie-breaking: row-major,
        # then object, then colour.
        return (self.y, self.x, self.obj, self.colour)

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "object": OBJECTS[self.obj], "colour": self.colour}

    @classmethod
    def from_json(cls, data: dict) -> "Utterance":
        obj = data["object"]
        if isinstance(obj, str):
            if obj not in OBJECTS:
                raise ValueError(f"unknown object {obj!r}")
            obj = OBJECTS.index(obj)
        return cls(int(data["x"]), int(data["y"]), int(obj), int(data.get("colour", 0)))


Spec = Sequence[Utterance]


class Grid:
    """A rendered 7x7 pattern: per-cell object and colour codes.

    Arrays are indexed ``[x, y]``; empty cells hold ``EMPTY`` in both.
    """

    __slots__ = ("objects", "colours")

    def __init__(self, objects: np.ndarray, colours: np.ndarray):
        self.objects = objects
        self.colours = colours

    def cell(self, x: int, y: int) -> tuple[int, int] | None:
        o = int(self.objects[x, y])
        if o == EMPTY:
            return None
        return (o, int(self.colours[x, y]))

    @property
    def occupied(self) -> np.ndarray:
        return self.objects != EMPTY

    def occupied_count(self) -> int:
        return int(self.occupied.sum())

    def utterances(self) -> list[Utterance]:
        """All reveals this grid supports, in canonical order."""
        out = []
        for x, y in zip(*np.nonzero(self.occupied)):
            out.append(Utterance(int(x), int(y), int(self.objects[x, y]), int(self.colours[x, y])))
        out.sort(key=Utterance.sort_key)
        return out

    def to_json(self) -> list[list[dict | None]]:
        rows = []
        for y in range(GRID_SIZE):
            row: list[dict | None] = []
            for x in range(GRID_SIZE):
                c = self.cell(x, y)
                row.append(None if c is None else {"object": OBJECTS[c[0]], "colour": c[1]})
            rows.append(row)
        return rows

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Grid)
            and np.array_equal(self.objects, other.objects)
            and np.array_equal(self.colours, other.colours)
        )

    def __repr__(self) -> str:
        glyphs = "CPo"
        lines = []
        for y in range(GRID_SIZE):
            chars = []
            for x in range(GRID_SIZE):
                c = self.cell(x, y)
                chars.append("." if c is None else f"{glyphs[c[0]]}{c[1]}")
            lines.append(" ".join(chars))
        return "\n".join(lines)


def thickness_value(choices: Sequence[int]) -> int:
    """Ring width as a value in {1, 2, 3} (the choice index plus one)."""
    return int(choices[I_THICK]) + 1


def check_choices(choices: Sequence[int]) -> None:
    """Raise ValueError unless ``choices`` is a well-formed choice vector."""
    if len(choices) != N_NONTERMINALS:
        raise ValueError(f"expected {N_NONTERMINALS} choices, got {len(choices)}")
    for i, (c, a) in enumerate(zip(choices, ARITIES)):
        if not 0 <= int(c) < a:
            raise ValueError(f"choice {c} out of range for {NONTERMINALS[i]} (arity {a})")


def is_valid_program(choices: Sequence[int]) -> bool:
    """Box validity: edges ordered and both dimensions fit the ring twice.

    Requires ``Left < Right``, ``Top < Bottom`` and both box dimensions at
    least ``2 * Thickness + 1``, so the interior is never empty.
    """
    left, right = int(choices[I_LEFT]), int(choices[I_RIGHT])
    top, bottom = int(choices[I_TOP]), int(choices[I_BOTTOM])
    t = thickness_value(choices)
    if not (left < right and top < bottom):
        return False
    return (right - left + 1) >= 2 * t + 1 and (bottom - top + 1) >= 2 * t + 1


_ENUMERATION: np.ndarray | None = None


def enumerate_programs() -> np.ndarray:
    """All valid programs as an ``(n, 12)`` int8 array, lexicographic order.

    The row order is the canonical program index used by every
    distribution in this package. The result is cached and must be
    treated as read-only.
    """
    global _ENUMERATION
    if _ENUMERATION is None:
        axes = np.meshgrid(*[np.arange(a, dtype=np.int8) for a in ARITIES], indexing="ij")
        all_programs = np.stack([ax.ravel() for ax in axes], axis=1)
        left = all_programs[:, I_LEFT].astype(np.int16)
        right = all_programs[:, I_RIGHT].astype(np.int16)
        top = all_programs[:, I_TOP].astype(np.int16)
        bottom = all_programs[:, I_BOTTOM].astype(np.int16)
        t = all_programs[:, I_THICK].astype(np.int16) + 1
        ok = (
            (left < right)
            & (top < bottom)
            & (right - left + 1 >= 2 * t + 1)
            & (bottom - top + 1 >= 2 * t + 1)
        )
        arr = all_programs[ok].copy()
        arr.setflags(write=False)
        _ENUMERATION = arr
    return _ENUMERATION


def render_all(programs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Render a batch of programs to object/colour arrays of shape (n, 7, 7)."""
    programs = np.asarray(programs)
    n = programs.shape[0]
    xs = np.arange(GRID_SIZE, dtype=np.int16).reshape(1, GRID_SIZE, 1)
    ys = np.arange(GRID_SIZE, dtype=np.int16).reshape(1, 1, GRID_SIZE)
    left = programs[:, I_LEFT].astype(np.int16).reshape(n, 1, 1)
    right = programs[:, I_RIGHT].astype(np.int16).reshape(n, 1, 1)
    top = programs[:, I_TOP].astype(np.int16).reshape(n, 1, 1)
    bottom = programs[:, I_BOTTOM].astype(np.int16).reshape(n, 1, 1)
    thick = (programs[:, I_THICK].astype(np.int16) + 1).reshape(n, 1, 1)

    inbox = (left <= xs) & (xs <= right) & (top <= ys) & (ys <= bottom)
    ring_depth = np.minimum(np.minimum(xs - left, right - xs), np.minimum(ys - top, bottom - ys))
    ring = ring_depth < thick

    out_obj = programs[:, I_OUT].astype(np.int8).reshape(n, 1, 1)
    in_obj = programs[:, I_IN].astype(np.int8).reshape(n, 1, 1)
    objects = np.where(inbox, np.where(ring, out_obj, in_obj), np.int8(EMPTY))

    x_plane = np.broadcast_to(np.arange(GRID_SIZE, dtype=np.int8).reshape(GRID_SIZE, 1), (GRID_SIZE, GRID_SIZE))
    y_plane = np.broadcast_to(np.arange(GRID_SIZE, dtype=np.int8).reshape(1, GRID_SIZE), (GRID_SIZE, GRID_SIZE))
    a1_planes = np.stack([x_plane, y_plane, x_plane + y_plane])
    a1_vals = a1_planes[programs[:, I_A1]]
    colours = _A2_TABLE[programs[:, I_A2].astype(np.intp).reshape(n, 1, 1), a1_vals]
    colours = np.where(objects == PEBBLE, np.int8(0), colours)
    colours = np.where(inbox, colours, np.int8(EMPTY))
    return objects, colours


def render(choices: Sequence[int]) -> Grid:
    """Render one valid program to its grid."""
    check_choices(choices)
    if not is_valid_program(choices):
        raise ValueError(f"invalid program {tuple(choices)}")
    objects, colours = render_all(np.asarray([choices], dtype=np.int8))
    return Grid(objects[0], colours[0])


def consistent(choices: Sequence[int], spec: Spec) -> bool:
    """Whether the program agrees with every revealed cell in ``spec``.

    Colour is ignored for pebble reveals. Order and repetition of the
    reveals do not matter.
    """
    grid = render(choices)
    for u in spec:
        c = grid.cell(u.x, u.y)
        if c is None or c[0] != u.obj:
            return False
        if u.obj != PEBBLE and c[1] != u.colour:
            return False
    return True


def valid_utterances(choices: Sequence[int]) -> list[Utterance]:
    """Every reveal that is true of the program, in canonical order."""
    return render(choices).utterances()


def dedup_spec(utterances: Iterable[Utterance]) -> list[Utterance]:
    """Drop repeat reveals of a cell, keeping only the first occurrence."""
    seen: set[tuple[int, int]] = set()
    out = []
    for u in utterances:
        if u.cell not in seen:
            seen.add(u.cell)
            out.append(u)
    return out


def check_spec(utterances: Spec) -> None:
    """Raise ValueError if any two reveals share a cell or a field is out of range."""
    seen: set[tuple[int, int]] = set()
    for u in utterances:
        if not (0 <= u.x < GRID_SIZE and 0 <= u.y < GRID_SIZE):
            raise ValueError(f"cell ({u.x}, {u.y}) out of range")
        if not (0 <= u.obj < len(OBJECTS) and 0 <= u.colour < len(COLOURS)):
            raise ValueError(f"bad object/colour in {u}")
        if u.cell in seen:
            raise ValueError(f"duplicate reveal of cell {u.cell}")
        seen.add(u.cell)


def program_to_json(choices: Sequence[int]) -> list[int]:
    return [int(c) for c in choices]


def program_from_json(data: Sequence[int]) -> tuple[int, ...]:
    choices = tuple(int(c) for c in data)
    check_choices(choices)
    return choices


def spec_to_json(spec: Spec) -> list[dict]:
    return [u.to_json() for u in spec]


def spec_from_json(data: Iterable[dict]) -> list[Utterance]:
    return [Utterance.from_json(d) for d in data]
