"""Grids, scenarios, and the composition algebra.

A scenario is a rectangular grid of labeled cells with a value on each of the
four cell borders.  Adjacent borders must agree: the east value of a cell is
the west value of its right neighbor, the south value is the north value of
the cell below.  Outer borders are derived from the boundary cells.

Horizontal composition glues two scenarios side by side after padding each
operand with dummy rows according to the nil-insertion plan between the east
border of the left operand and the west border of the right one; vertical
composition is the dual with dummy columns.  Diagonal composition is derived:

    f1 <> f2 = (f1 | R | L) stacked over (S | Id | R) over (L | S | f2)

with a recorder column turning the east border into a spatial bundle, a
speaker row turning the south border into a temporal bundle, one identity
cell routing both, and distributor row/column feeding f2.  For 1x1 operands
this yields the 3x3 layout of the defining formula.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional, Sequence

from .iface import (
    InsertionPlan,
    Value,
    VList,
    VNIL,
    align_up_to_nil,
    bundle_values,
    canon_value,
    is_nil_value,
    value_from_json,
    value_to_json,
    values_equal,
)

# Reserved cell labels; user modules may not use them.
LABEL_DUMMY = "-"
LABEL_ID = "I"
LABEL_REC = "R"
LABEL_SPK = "S"
LABEL_EMPTY = "L"
RESERVED_WIRE_LABELS = {LABEL_DUMMY, LABEL_ID, LABEL_EMPTY}


class ScenarioError(Exception):
    pass


class BorderMismatch(ScenarioError):
    def __init__(self, axis, left, right):
        self.axis = axis
        super().__init__(f"border mismatch on {axis}: {left} vs {right}")


class ArityMismatch(ScenarioError):
    pass


def _check_adjacency(cells):
    for r, row in enumerate(cells):
        for c, cell in enumerate(row):
            if c + 1 < len(row) and cell.east != row[c + 1].west:
                raise ScenarioError(
                    f"adjacency violated at ({r},{c})/({r},{c+1}): "
                    f"{cell.east} != {row[c + 1].west}"
                )
            if r + 1 < len(cells) and cell.south != cells[r + 1][c].north:
                raise ScenarioError(
                    f"adjacency violated at ({r},{c})/({r+1},{c}): "
                    f"{cell.south} != {cells[r + 1][c].north}"
                )


@dataclass(frozen=True)
class Grid:
    """Rectangular array of letters."""

    cells: tuple  # tuple of rows, each a tuple of single-char strings

    def __post_init__(self):
        if self.cells:
            w = len(self.cells[0])
            if any(len(r) != w for r in self.cells):
                raise ScenarioError("grid is not rectangular")

    @property
    def rows(self):
        return len(self.cells)

    @property
    def cols(self):
        return len(self.cells[0]) if self.cells else 0


@dataclass(frozen=True)
class Cell:
    """One grid cell; border values are canonicalized on construction."""

    label: str
    west: Value = VNIL
    north: Value = VNIL
    east: Value = VNIL
    south: Value = VNIL

    def __post_init__(self):
        object.__setattr__(self, "west", canon_value(self.west))
        object.__setattr__(self, "north", canon_value(self.north))
        object.__setattr__(self, "east", canon_value(self.east))
        object.__setattr__(self, "south", canon_value(self.south))


class Scenario:
    """Immutable rectangular cell array; adjacency checked on construction.

    Compositions construct results with ``validate=False`` after asserting
    the glue seams: operand interiors were validated when the operands were
    built, so only the new borders can go wrong.
    """

    __slots__ = ("cells",)

    def __init__(self, rows: Sequence[Sequence[Cell]], validate: bool = True):
        cells = tuple(tuple(row) for row in rows)
        if cells:
            w = len(cells[0])
            if any(len(r) != w for r in cells):
                raise ScenarioError("scenario is not rectangular")
        if validate:
            _check_adjacency(cells)
        object.__setattr__(self, "cells", cells)

    def verify(self) -> "Scenario":
        _check_adjacency(self.cells)
        return self

    def __setattr__(self, *a):
        raise AttributeError("Scenario is immutable")

    @property
    def rows(self):
        return len(self.cells)

    @property
    def cols(self):
        return len(self.cells[0]) if self.cells else 0

    def cell(self, r, c) -> Cell:
        return self.cells[r][c]

    # outer borders, one entry per boundary cell
    def west_border(self):
        return [row[0].west for row in self.cells] if self.cols else []

    def east_border(self):
        return [row[-1].east for row in self.cells] if self.cols else []

    def north_border(self):
        return [c.north for c in self.cells[0]] if self.rows else []

    def south_border(self):
        return [c.south for c in self.cells[-1]] if self.rows else []

    def west_data(self) -> Value:
        return bundle_values(self.west_border())

    def north_data(self) -> Value:
        return bundle_values(self.north_border())

    def east_data(self) -> Value:
        return bundle_values(self.east_border())

    def south_data(self) -> Value:
        return bundle_values(self.south_border())

    def grid(self) -> Grid:
        return Grid(tuple(tuple(c.label[0] if c.label else "?" for c in row) for row in self.cells))

    def __eq__(self, other):
        return isinstance(other, Scenario) and self.cells == other.cells

    def __hash__(self):
        return hash(self.cells)

    def __repr__(self):
        return f"<Scenario {self.rows}x{self.cols}>"

    def to_json(self):
        return {
            "rows": self.rows,
            "cols": self.cols,
            "cells": [
                {
                    "label": c.label,
                    "w": value_to_json(c.west),
                    "n": value_to_json(c.north),
                    "e": value_to_json(c.east),
                    "s": value_to_json(c.south),
                }
                for row in self.cells
                for c in row
            ],
        }

    @staticmethod
    def from_json(obj) -> "Scenario":
        rows, cols = obj["rows"], obj["cols"]
        flat = [
            Cell(
                d["label"],
                value_from_json(d["w"]),
                value_from_json(d["n"]),
                value_from_json(d["e"]),
                value_from_json(d["s"]),
            )
            for d in obj["cells"]
        ]
        return Scenario([flat[r * cols : (r + 1) * cols] for r in range(rows)])


def single_cell(label, west=VNIL, north=VNIL, east=VNIL, south=VNIL) -> Scenario:
    return Scenario([[Cell(label, west, north, east, south)]])


# ---------------------------------------------------------------------------
# Constant cells
# ---------------------------------------------------------------------------


def id_cell(tvalue: Value = VNIL, svalue: Value = VNIL) -> Scenario:
    """Id(m,p): passes temporal west->east and spatial north->south."""
    return single_cell(LABEL_ID, west=tvalue, north=svalue, east=tvalue, south=svalue)


def id_row(svalues: Sequence[Value]) -> Scenario:
    """Id(0,m) as a row: vertical wires, identity of vertical composition."""
    return Scenario([[Cell(LABEL_ID, north=v, south=v) for v in svalues]])


def id_col(tvalues: Sequence[Value]) -> Scenario:
    """Id(m,0) as a column: horizontal wires, identity of horizontal composition."""
    return Scenario([[Cell(LABEL_ID, west=v, east=v)] for v in tvalues])


def recorder_cell(tvalue: Value) -> Scenario:
    """R: temporal west input re-emitted as spatial south output."""
    return single_cell(LABEL_REC, west=tvalue, south=tvalue)


def speaker_cell(svalue: Value) -> Scenario:
    """S: spatial north input re-emitted as temporal east output."""
    return single_cell(LABEL_SPK, north=svalue, east=svalue)


def empty_cell() -> Scenario:
    return single_cell(LABEL_EMPTY)


def _dummy_row(values: Sequence[Value]):
    """Vertical wires with nil temporal borders (inserted by hcomp padding)."""
    return [Cell(LABEL_DUMMY, north=v, south=v) for v in values]


def _dummy_col_cell(value: Value):
    return Cell(LABEL_DUMMY, west=value, east=value)


# ---------------------------------------------------------------------------
# Padding and composition
# ---------------------------------------------------------------------------


def _insert_dummy_rows(s: Scenario, positions: Iterable[int]) -> Scenario:
    rows = [list(r) for r in s.cells]
    for k in positions:  # positions are ascending indices in the padded scenario
        if k == 0:
            crossing = [c.north for c in rows[0]] if rows else []
        elif k >= len(rows):
            crossing = [c.south for c in rows[-1]] if rows else []
        else:
            crossing = [c.north for c in rows[k]]
        rows.insert(k, _dummy_row(crossing))
    return Scenario(rows, validate=False)


def _insert_dummy_cols(s: Scenario, positions: Iterable[int]) -> Scenario:
    rows = [list(r) for r in s.cells]
    for k in positions:
        for row in rows:
            if k == 0:
                crossing = row[0].west if row else VNIL
            elif k >= len(row):
                crossing = row[-1].east if row else VNIL
            else:
                crossing = row[k].west
            row.insert(k, _dummy_col_cell(crossing))
    return Scenario(rows, validate=False)


def _value_plan(left, right) -> Optional[InsertionPlan]:
    return align_up_to_nil(left, right, is_nil=is_nil_value, equal=values_equal)


def hcomp(f1: Scenario, f2: Scenario) -> Scenario:
    """Horizontal composition; defined when east(f1) =_n west(f2)."""
    plan = _value_plan(f1.east_border(), f2.west_border())
    if plan is None:
        raise BorderMismatch("east/west", f1.east_border(), f2.west_border())
    f1p = _insert_dummy_rows(f1, plan.left)
    f2p = _insert_dummy_rows(f2, plan.right)
    assert f1p.rows == f2p.rows
    if f1p.east_border() != f2p.west_border():
        raise BorderMismatch("east/west", f1p.east_border(), f2p.west_border())
    return Scenario([list(r1) + list(r2) for r1, r2 in zip(f1p.cells, f2p.cells)], validate=False)


def vcomp(f1: Scenario, f2: Scenario) -> Scenario:
    """Vertical composition; defined when south(f1) =_n north(f2)."""
    plan = _value_plan(f1.south_border(), f2.north_border())
    if plan is None:
        raise BorderMismatch("south/north", f1.south_border(), f2.north_border())
    f1p = _insert_dummy_cols(f1, plan.left)
    f2p = _insert_dummy_cols(f2, plan.right)
    assert f1p.cols == f2p.cols
    if f1p.south_border() != f2p.north_border():
        raise BorderMismatch("south/north", f1p.south_border(), f2p.north_border())
    return Scenario(list(f1p.cells) + list(f2p.cells), validate=False)


def _nonnil(values):
    return [canon_value(v) for v in values if not is_nil_value(canon_value(v))]


def _recorder_column(tvalues: Sequence[Value]):
    """Column bundling a temporal border into one spatial output at the bottom."""
    cells, acc = [], []
    for v in tvalues:
        before = bundle_values(acc)
        if not is_nil_value(canon_value(v)):
            acc.append(v)
        cells.append(Cell(LABEL_REC, west=v, north=before, south=bundle_values(acc)))
    return cells, bundle_values(acc)


def _speaker_row(svalues: Sequence[Value]):
    """Row bundling a spatial border into one temporal output at the right."""
    cells, acc = [], []
    for v in svalues:
        before = bundle_values(acc)
        if not is_nil_value(canon_value(v)):
            acc.append(v)
        cells.append(Cell(LABEL_SPK, north=v, west=before, east=bundle_values(acc)))
    return cells, bundle_values(acc)


def _distributor_row(bundle: Value, targets: Sequence[Value]):
    """Row unbundling a temporal input into the given spatial target border."""
    items = list(bundle.items) if isinstance(bundle, VList) else _nonnil([bundle])
    cells = []
    for v in targets:
        before = bundle_values(items)
        if not is_nil_value(canon_value(v)):
            items = items[1:]
            cells.append(Cell(LABEL_REC, west=before, south=v, east=bundle_values(items)))
        else:
            cells.append(Cell(LABEL_REC, west=before, east=before))
    return cells


def _distributor_col(bundle: Value, targets: Sequence[Value]):
    """Column unbundling a spatial input into the given temporal target border."""
    items = list(bundle.items) if isinstance(bundle, VList) else _nonnil([bundle])
    cells = []
    for v in targets:
        before = bundle_values(items)
        if not is_nil_value(canon_value(v)):
            items = items[1:]
            cells.append(Cell(LABEL_SPK, north=before, east=v, south=bundle_values(items)))
        else:
            cells.append(Cell(LABEL_SPK, north=before, south=before))
    return cells


def _dcomp_extend(rows, f2: Scenario) -> None:
    """Extend a mutable row-list chain with one diagonal composition frame."""
    e1 = [row[-1].east for row in rows] if rows and rows[0] else []
    s1 = [c.south for c in rows[-1]] if rows else []
    w2, n2 = f2.west_border(), f2.north_border()
    if _value_plan(e1, w2) is None:
        raise BorderMismatch("east/west", e1, w2)
    if _value_plan(s1, n2) is None:
        raise BorderMismatch("south/north", s1, n2)

    c1 = len(rows[0]) if rows else 0
    c2 = f2.cols
    rec_col, e_bundle = _recorder_column(e1)
    spk_row, s_bundle = _speaker_row(s1)
    mid_id = Cell(LABEL_ID, west=s_bundle, north=e_bundle, east=s_bundle, south=e_bundle)
    dist_row = _distributor_row(s_bundle, n2)
    dist_col = _distributor_col(e_bundle, w2)

    empty = Cell(LABEL_EMPTY)
    for i, row in enumerate(rows):
        row.append(rec_col[i])
        row.extend([empty] * c2)
    rows.append(spk_row + [mid_id] + dist_row)
    for i in range(f2.rows):
        rows.append([empty] * c1 + [dist_col[i]] + list(f2.cells[i]))


def dcomp(f1: Scenario, f2: Scenario) -> Scenario:
    """Diagonal composition per the defining formula with sized constants."""
    rows = [list(r) for r in f1.cells]
    _dcomp_extend(rows, f2)
    return Scenario(rows, validate=False)


def dcomp_chain(parts: Sequence[Scenario]) -> Scenario:
    """Left-associated dcomp over a nonempty list, built in one pass."""
    if not parts:
        raise ScenarioError("empty diagonal chain")
    rows = [list(r) for r in parts[0].cells]
    for f2 in parts[1:]:
        _dcomp_extend(rows, f2)
    return Scenario(rows, validate=False)


# ---------------------------------------------------------------------------
# Dummy normalization and equivalence
# ---------------------------------------------------------------------------


def _row_removable(row):
    return all(
        c.label in RESERVED_WIRE_LABELS and is_nil_value(c.west) and is_nil_value(c.east) and c.north == c.south
        for c in row
    )


def _col_removable(cells, c):
    return all(
        row[c].label in RESERVED_WIRE_LABELS
        and is_nil_value(row[c].north)
        and is_nil_value(row[c].south)
        and row[c].west == row[c].east
        for row in cells
    )


def normalize(s: Scenario) -> Scenario:
    """Remove wire rows/columns (dummies, identities, empty cells)."""
    cells = [list(r) for r in s.cells]
    changed = True
    while changed:
        changed = False
        for r in range(len(cells) - 1, -1, -1):
            if cells and _row_removable(cells[r]):
                del cells[r]
                changed = True
        ncols = len(cells[0]) if cells else 0
        for c in range(ncols - 1, -1, -1):
            if cells and _col_removable(cells, c):
                for row in cells:
                    del row[c]
                changed = True
        if cells and not cells[0]:
            cells = []
    return Scenario(cells)


def equivalent(f1: Scenario, f2: Scenario) -> bool:
    """Structural equality modulo dummy/wire rows and columns."""
    return normalize(f1) == normalize(f2)


def borders_equal_up_to_nil(f1: Scenario, f2: Scenario) -> bool:
    return (
        values_equal(f1.west_data(), f2.west_data())
        and values_equal(f1.north_data(), f2.north_data())
        and values_equal(f1.east_data(), f2.east_data())
        and values_equal(f1.south_data(), f2.south_data())
    )


# ---------------------------------------------------------------------------
# Finite spatio-temporal specification relations (test oracles)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpecRelation:
    """Finite relation over (voices^m x registers^p) -> (voices^n x registers^q)."""

    m: int
    p: int
    n: int
    q: int
    tuples: frozenset  # of ((v, r), (v2, r2)) with int tuples of matching arity

    def __post_init__(self):
        for (v, r), (v2, r2) in self.tuples:
            if len(v) != self.m or len(r) != self.p or len(v2) != self.n or len(r2) != self.q:
                raise ArityMismatch(f"tuple arity does not match {self.m, self.p, self.n, self.q}")

    @staticmethod
    def identity(m: int, p: int, universe: Sequence[int]) -> "SpecRelation":
        tuples = set()
        for v in product(universe, repeat=m):
            for r in product(universe, repeat=p):
                tuples.add(((v, r), (v, r)))
        return SpecRelation(m, p, m, p, frozenset(tuples))


def spec_hcomp(s1: SpecRelation, s2: SpecRelation) -> SpecRelation:
    """Relational composition on voices, product on registers."""
    if s1.n != s2.m:
        raise ArityMismatch(f"voice arities disagree: {s1.n} vs {s2.m}")
    out = set()
    for (v, r1), (vmid, r1o) in s1.tuples:
        for (v2, r2), (vout, r2o) in s2.tuples:
            if vmid == v2:
                out.add(((v, r1 + r2), (vout, r1o + r2o)))
    return SpecRelation(s1.m, s1.p + s2.p, s2.n, s1.q + s2.q, frozenset(out))
