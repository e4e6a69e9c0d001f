"""Restricted MPS importer: binary variables, N/L/G/E rows only.

``G`` rows are negated into ``<=`` form and ``E`` rows are split into a
``<=`` pair, matching the canonical storage of :class:`ipdiff.instance.IPInstance`.
Variables must be binary: either inside a ``MARKER INTORG/INTEND`` block
(with default or explicit [0,1] bounds) or declared ``BV`` in BOUNDS.
RANGES sections and continuous/general-integer variables are rejected.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .instance import MAX, MIN, IPInstance, ParseError


def read_mps(path) -> IPInstance:
    path = Path(path)
    name = path.stem
    sense = MIN
    row_types: dict[str, str] = {}
    row_order: list[str] = []
    obj_row: str | None = None
    col_order: list[str] = []
    col_entries: dict[str, dict[str, float]] = {}
    obj_coef: dict[str, float] = {}
    rhs: dict[str, float] = {}
    integer_cols: set[str] = set()
    bv_cols: set[str] = set()
    bounded_cols: dict[str, list[float | None]] = {}

    section = None
    in_integer_block = False
    pending_objsense = False

    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if not raw[0].isspace():
            section = raw.split()[0].upper()
            if section == "RANGES":
                raise ParseError("RANGES sections are not supported", path, lineno)
            pending_objsense = section == "OBJSENSE"
            tokens = raw.split()
            if pending_objsense and len(tokens) > 1:
                sense = _parse_sense(tokens[1], path, lineno)
                pending_objsense = False
            if section == "ENDATA":
                break
            continue
        fields = raw.split()
        if pending_objsense:
            sense = _parse_sense(fields[0], path, lineno)
            pending_objsense = False
            continue
        if section == "ROWS":
            if len(fields) != 2:
                raise ParseError(f"bad ROWS line: {raw!r}", path, lineno)
            rtype, rname = fields[0].upper(), fields[1]
            if rtype == "N":
                if obj_row is None:
                    obj_row = rname
            elif rtype in ("L", "G", "E"):
                row_types[rname] = rtype
                row_order.append(rname)
            else:
                raise ParseError(f"unsupported row type {rtype!r}", path, lineno)
        elif section == "COLUMNS":
            if len(fields) >= 3 and fields[1].upper() == "'MARKER'":
                marker = fields[2].strip("'").upper()
                in_integer_block = marker == "INTORG"
                continue
            col = fields[0]
            if col not in col_entries:
                col_entries[col] = {}
                col_order.append(col)
                if in_integer_block:
                    integer_cols.add(col)
            pairs = fields[1:]
            if len(pairs) % 2 != 0:
                raise ParseError(f"bad COLUMNS line: {raw!r}", path, lineno)
            for rname, val_text in zip(pairs[::2], pairs[1::2]):
                try:
                    val = float(val_text)
                except ValueError:
                    raise ParseError(f"bad coefficient {val_text!r}", path, lineno) from None
                if rname == obj_row:
                    obj_coef[col] = obj_coef.get(col, 0.0) + val
                elif rname in row_types:
                    ent = col_entries[col]
                    ent[rname] = ent.get(rname, 0.0) + val
                else:
                    raise ParseError(f"unknown row {rname!r}", path, lineno)
        elif section == "RHS":
            pairs = fields[1:]
            if len(pairs) % 2 != 0:
                raise ParseError(f"bad RHS line: {raw!r}", path, lineno)
            for rname, val_text in zip(pairs[::2], pairs[1::2]):
                if rname not in row_types and rname != obj_row:
                    raise ParseError(f"unknown row {rname!r}", path, lineno)
                if rname in row_types:
                    rhs[rname] = float(val_text)
        elif section == "BOUNDS":
            btype = fields[0].upper()
            col = fields[2]
            if btype == "BV":
                bv_cols.add(col)
            elif btype in ("UP", "LO", "FX"):
                val = float(fields[3])
                lo_hi = bounded_cols.setdefault(col, [None, None])
                if btype in ("LO", "FX"):
                    lo_hi[0] = val
                if btype in ("UP", "FX"):
                    lo_hi[1] = val
            else:
                raise ParseError(f"unsupported bound type {btype!r}", path, lineno)
        elif section in ("NAME", None):
            continue
        else:
            raise ParseError(f"unsupported section {section!r}", path, lineno)

    if obj_row is None:
        raise ParseError("no objective (N) row found", path)
    if not col_order:
        raise ParseError("no variables found", path)

    for col in col_order:
        lo, hi = bounded_cols.get(col, [None, None])
        binary = col in bv_cols or (
            col in integer_cols
            and (lo is None or lo == 0.0)
            and (hi is None or hi == 1.0)
        )
        if not binary:
            raise ParseError(f"variable {col!r} is not binary", path)

    var_index = {col: j for j, col in enumerate(col_order)}
    c = np.array([obj_coef.get(col, 0.0) for col in col_order])
    rows: list[tuple[tuple[int, float], ...]] = []
    b: list[float] = []
    for rname in row_order:
        entries = [
            (var_index[col], col_entries[col][rname])
            for col in col_order
            if rname in col_entries[col]
        ]
        if not entries:
            raise ParseError(f"row {rname!r} has no entries", path)
        rtype = row_types[rname]
        rhs_val = rhs.get(rname, 0.0)
        if rtype in ("L", "E"):
            rows.append(tuple(entries))
            b.append(rhs_val)
        if rtype in ("G", "E"):
            rows.append(tuple((j, -a) for j, a in entries))
            b.append(-rhs_val)
    return IPInstance(
        name=name, n=len(col_order), c=c, rows=tuple(rows), b=np.array(b), sense=sense
    )


def _parse_sense(token: str, path, lineno: int) -> str:
    token = token.upper()
    if token in ("MIN", "MINIMIZE"):
        return MIN
    if token in ("MAX", "MAXIMIZE"):
        return MAX
    raise ParseError(f"bad OBJSENSE {token!r}", path, lineno)
