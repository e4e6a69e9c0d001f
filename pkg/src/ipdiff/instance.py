"""Canonical 0-1 program data model, feasibility arithmetic, and file I/O.

All constraints are stored in the form ``A x <= b``.  Imports that contain
``>=`` rows negate them and ``=`` rows are split into a pair of ``<=`` rows,
so downstream code only ever deals with one inequality direction.  The
objective keeps its authored sense (``min`` or ``max``); :func:`canonicalize`
produces the equivalent minimization form used by the oracle and by guided
sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

MIN = "min"
MAX = "max"

INSTANCE_HEADER = "ipdiff-instance v1"
SOLUTION_HEADER = "ipdiff-solution v1"
POOL_HEADER = "ipdiff-pool v1"


class DimensionMismatch(ValueError):
    """Solution length does not match the instance's variable count."""


class ParseError(ValueError):
    """Malformed instance/solution/pool file.  Carries line context."""

    def __init__(self, message: str, path=None, line: Optional[int] = None):
        ctx = ""
        if path is not None:
            ctx += f"{path}:"
        if line is not None:
            ctx += f"{line}:"
        super().__init__(f"{ctx} {message}" if ctx else message)
        self.path = path
        self.line = line


SparseRow = tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class IPInstance:
    """A 0-1 integer program ``opt c.x  s.t.  A x <= b,  x in {0,1}^n``."""

    name: str
    n: int
    c: np.ndarray
    rows: tuple[SparseRow, ...]
    b: np.ndarray
    sense: str = MIN

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one variable, got n={self.n}")
        if self.sense not in (MIN, MAX):
            raise ValueError(f"sense must be '{MIN}' or '{MAX}', got {self.sense!r}")
        c = np.asarray(self.c, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if c.shape != (self.n,):
            raise ValueError(f"c has shape {c.shape}, expected ({self.n},)")
        if b.shape != (len(self.rows),):
            raise ValueError(f"b has length {b.shape}, expected {len(self.rows)}")
        if not np.all(np.isfinite(c)):
            raise ValueError("objective coefficients must be finite")
        if not np.all(np.isfinite(b)):
            raise ValueError("right-hand sides must be finite")
        rows = tuple(tuple((int(j), float(a)) for j, a in row) for row in self.rows)
        for k, row in enumerate(rows):
            if not row:
                raise ValueError(f"row {k} is empty")
            for j, a in row:
                if not 0 <= j < self.n:
                    raise ValueError(f"row {k}: variable index {j} out of range [0,{self.n})")
                if not np.isfinite(a):
                    raise ValueError(f"row {k}: non-finite coefficient for variable {j}")
        c.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return len(self.rows)

    def dense_matrix(self) -> np.ndarray:
        """Dense (m, n) constraint matrix; convenient at desk scale."""
        A = np.zeros((self.m, self.n))
        for k, row in enumerate(self.rows):
            for j, a in row:
                A[k, j] += a
        return A

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        """a_k . x for every row, as a length-m vector."""
        act = np.zeros(self.m)
        for k, row in enumerate(self.rows):
            act[k] = sum(a * x[j] for j, a in row)
        return act

    def __eq__(self, other) -> bool:
        if not isinstance(other, IPInstance):
            return NotImplemented
        return (
            self.name == other.name
            and self.n == other.n
            and self.sense == other.sense
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.b, other.b)
            and self.rows == other.rows
        )


@dataclass(frozen=True)
class Solution:
    """A complete binary assignment."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int8)
        if v.ndim != 1:
            raise ValueError("solution values must be a vector")
        if not np.all((v == 0) | (v == 1)):
            raise ValueError("solution values must be 0/1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    def bits(self) -> str:
        return "".join("1" if v else "0" for v in self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Solution):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


@dataclass(frozen=True)
class PartialAssignment:
    """Binary values on a fixed subset of variables.

    ``values`` entries are only meaningful where ``fixed_mask`` is true.
    """

    fixed_mask: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.fixed_mask, dtype=bool)
        v = np.asarray(self.values, dtype=np.int8)
        if mask.shape != v.shape or mask.ndim != 1:
            raise ValueError("fixed_mask and values must be vectors of equal length")
        if not np.all((v == 0) | (v == 1)):
            raise ValueError("partial values must be 0/1")
        mask.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "fixed_mask", mask)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def num_fixed(self) -> int:
        return int(self.fixed_mask.sum())


@dataclass(frozen=True)
class EvalReport:
    """Feasibility/quality summary for one solution against one instance."""

    objective: float
    feasible: bool
    violation_sum: float
    gap: Optional[float] = None
    gap_out_of_range: bool = False  # mixed-sign objectives can push gap past 1


def _check_len(inst: IPInstance, x: Solution) -> None:
    if len(x) != inst.n:
        raise DimensionMismatch(f"solution has {len(x)} entries, instance has n={inst.n}")


def canonicalize(inst: IPInstance) -> IPInstance:
    """Equivalent minimization instance (c negated when the input maximizes)."""
    if inst.sense == MIN:
        return inst
    return replace(inst, c=-np.asarray(inst.c), sense=MIN)


def objective_value(inst: IPInstance, x: Solution) -> float:
    """c . x in the instance's authored sense."""
    _check_len(inst, x)
    return float(inst.c @ x.values)


def violation_sum(inst: IPInstance, x: Solution) -> float:
    """Total constraint violation  sum_k max(a_k.x - b_k, 0)."""
    _check_len(inst, x)
    act = inst.row_activity(x.values.astype(float))
    return float(np.maximum(act - inst.b, 0.0).sum())


def violation_mean(inst: IPInstance, x: Solution) -> float:
    """Per-constraint average violation; 0 for an unconstrained instance."""
    if inst.m == 0:
        _check_len(inst, x)
        return 0.0
    return violation_sum(inst, x) / inst.m


def is_feasible(inst: IPInstance, x: Solution) -> bool:
    return violation_sum(inst, x) == 0.0


def gap(obj_x: float, obj_ref: float) -> float:
    """Relative distance |obj_x - obj_ref| / max(|obj_x|, |obj_ref|).

    Symmetric in its arguments; defined as 0 when both objectives are 0.
    With mixed-sign arguments the same formula applies and may exceed 1.
    """
    denom = max(abs(obj_x), abs(obj_ref))
    if denom == 0.0:
        return 0.0
    return abs(obj_x - obj_ref) / denom


# ---------------------------------------------------------------------------
# file I/O


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_instance(inst: IPInstance, path) -> None:
    lines = [
        INSTANCE_HEADER,
        f"name={inst.name}",
        f"sense={inst.sense}",
        f"n={inst.n}",
        f"m={inst.m}",
        "c=" + " ".join(_fmt(v) for v in inst.c),
        "b=" + " ".join(_fmt(v) for v in inst.b),
    ]
    for k, row in enumerate(inst.rows):
        lines.append(f"row {k}: " + " ".join(f"{j}:{_fmt(a)}" for j, a in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _expect_field(line: str, key: str, path, lineno: int) -> str:
    prefix = key + "="
    if not line.startswith(prefix):
        raise ParseError(f"expected '{key}=...', got {line!r}", path, lineno)
    return line[len(prefix):]


def read_instance(path) -> IPInstance:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != INSTANCE_HEADER:
        raise ParseError(f"missing header {INSTANCE_HEADER!r}", path, 1)
    try:
        name = _expect_field(lines[1], "name", path, 2)
        sense = _expect_field(lines[2], "sense", path, 3)
        n = int(_expect_field(lines[3], "n", path, 4))
        m = int(_expect_field(lines[4], "m", path, 5))
        c = np.array([float(v) for v in _expect_field(lines[5], "c", path, 6).split()])
        b_text = _expect_field(lines[6], "b", path, 7).split()
        b = np.array([float(v) for v in b_text]) if b_text else np.zeros(0)
    except IndexError:
        raise ParseError("truncated file", path, len(lines)) from None
    except ValueError as e:
        raise ParseError(str(e), path) from None
    if sense in ("minimize", "min"):
        sense = MIN
    elif sense in ("maximize", "max"):
        sense = MAX
    else:
        raise ParseError(f"unknown sense {sense!r}", path, 3)
    rows = []
    for offset, line in enumerate(lines[7:], start=8):
        if not line.strip():
            continue
        head, _, body = line.partition(":")
        if not head.startswith("row "):
            raise ParseError(f"expected 'row <k>: ...', got {line!r}", path, offset)
        entries = []
        for tok in body.split():
            j_text, _, a_text = tok.partition(":")
            try:
                entries.append((int(j_text), float(a_text)))
            except ValueError:
                raise ParseError(f"bad row entry {tok!r}", path, offset) from None
        rows.append(tuple(entries))
    if len(rows) != m:
        raise ParseError(f"declared m={m} but found {len(rows)} rows", path)
    try:
        return IPInstance(name=name, n=n, c=c, rows=tuple(rows), b=b, sense=sense)
    except ValueError as e:
        raise ParseError(str(e), path) from None


def write_solution(x: Solution, path) -> None:
    Path(path).write_text(
        f"{SOLUTION_HEADER}\nn={len(x)}\nx={x.bits()}\n", encoding="utf-8"
    )


def read_solution(path) -> Solution:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != SOLUTION_HEADER:
        raise ParseError(f"missing header {SOLUTION_HEADER!r}", path, 1)
    try:
        n = int(_expect_field(lines[1], "n", path, 2))
        bits = _expect_field(lines[2], "x", path, 3)
    except IndexError:
        raise ParseError("truncated file", path, len(lines)) from None
    if len(bits) != n or any(ch not in "01" for ch in bits):
        raise ParseError(f"x must be {n} bits", path, 3)
    return Solution(np.array([int(ch) for ch in bits], dtype=np.int8))


def write_pool(entries: Sequence[tuple[Solution, float]], path) -> None:
    """Write a best-first solution pool: ``obj=<real> x=<bits>`` per line."""
    lines = [POOL_HEADER]
    for sol, obj in entries:
        lines.append(f"obj={_fmt(obj)} x={sol.bits()}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_pool(path) -> list[tuple[Solution, float]]:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != POOL_HEADER:
        raise ParseError(f"missing header {POOL_HEADER!r}", path, 1)
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj_part, x_part = line.split()
            obj = float(_expect_field(obj_part, "obj", path, lineno))
            bits = _expect_field(x_part, "x", path, lineno)
            sol = Solution(np.array([int(ch) for ch in bits], dtype=np.int8))
        except (ValueError, ParseError) as e:
            raise ParseError(f"bad pool line: {e}", path, lineno) from None
        out.append((sol, obj))
    return out
