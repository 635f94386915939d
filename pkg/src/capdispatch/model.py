"""Canonical QP/LP form, named rows, and dispatch-case compilation.

Every problem in the package is stored as

    minimize    1/2 x'Qx + c'x
    subject to  A x <= b        (inequality rows, duals lam >= 0)
                G x  = h        (equality rows, duals nu free)

with Lagrangian ``1/2 x'Qx + c'x + lam'(Ax - b) + nu'(Gx - h)``.  Under that
sign choice the optimal value moves by ``-lam_i`` per unit increase of
``b_i`` and by ``-nu_i`` per unit increase of ``h_i``.

Bus-balance rows are written as ``load - generation + net outflow = -fixed
demand``, so the balance dual is the (positive) price of one more unit of
consumption at that bus.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from .errors import (
    DimensionMismatch,
    IslandedBusWarning,
    NonFinite,
    NotPsd,
    NotSymmetric,
    ParseError,
    SchemaViolation,
    UnknownRow,
)

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


# ---------------------------------------------------------------------------
# canonical QP
# ---------------------------------------------------------------------------

def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CanonicalQp:
    """Validated convex QP in the package's single internal normal form.

    Build instances with :func:`build_qp`; the constructor does no checking.
    ``maximize`` records that the source problem was a maximization and has
    already been negated, so only the displayed objective flips sign.
    """

    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray
    maximize: bool = False

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m_ineq(self) -> int:
        return self.b.shape[0]

    @property
    def m_eq(self) -> int:
        return self.h.shape[0]

    @property
    def is_linear(self) -> bool:
        return not np.any(self.Q)

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.Q @ x + self.c @ x)

    def display_objective(self, value: float) -> float:
        """Objective in the sense the problem was declared in."""
        return -value if self.maximize else value

    def with_rhs(self, kind: str, index: int, delta: float) -> "CanonicalQp":
        """Copy with one right-hand side entry shifted by ``delta``."""
        b, h = self.b.copy(), self.h.copy()
        if kind == "ineq":
            b[index] += delta
        elif kind == "eq":
            h[index] += delta
        else:
            raise ValueError(f"row kind must be 'ineq' or 'eq', got {kind!r}")
        return CanonicalQp(self.Q, self.c, self.A, _frozen(b), self.G, _frozen(h), self.maximize)

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        for arr in (self.Q, self.c, self.A, self.b, self.G, self.h):
            digest.update(str(arr.shape).encode())
            digest.update(np.ascontiguousarray(arr).tobytes())
        digest.update(b"max" if self.maximize else b"min")
        return digest.hexdigest()[:16]

    def same_as(self, other: "CanonicalQp") -> bool:
        """Bitwise equality of every array and the sense flag."""
        pairs = zip((self.Q, self.c, self.A, self.b, self.G, self.h),
                    (other.Q, other.c, other.A, other.b, other.G, other.h))
        return self.maximize == other.maximize and all(
            x.shape == y.shape and x.tobytes() == y.tobytes() for x, y in pairs
        )


def _matrix(M, cols: int, name: str) -> np.ndarray:
    if M is None:
        return np.zeros((0, cols))
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        rows = M.shape[0] if M.ndim == 2 and M.shape[1] == cols else 0
        return np.zeros((rows, cols))
    M = np.atleast_2d(M)
    if M.ndim != 2 or M.shape[1] != cols:
        raise DimensionMismatch(f"{name} has shape {M.shape}, expected (*, {cols})")
    return M


def _vector(v, size: int, name: str) -> np.ndarray:
    if v is None:
        v = np.zeros(size)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != size:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {size}")
    return v


def build_qp(Q, c, A=None, b=None, G=None, h=None, *, maximize: bool = False) -> CanonicalQp:
    """Validate arrays and return a :class:`CanonicalQp`.

    Parameters
    ----------
    Q : array_like, shape (n, n)
        Symmetric positive semidefinite cost matrix.  Asymmetry up to 1e-12
        is averaged away; anything larger is rejected.
    c : array_like, shape (n,)
    A, b : array_like, optional
        Inequality rows ``A x <= b``.
    G, h : array_like, optional
        Equality rows ``G x = h``.
    maximize : bool
        Pass True when ``Q`` and ``c`` were obtained by negating a
        maximization objective.

    Raises
    ------
    DimensionMismatch, NotSymmetric, NotPsd, NonFinite
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.shape[0]
    Q = np.asarray(Q, dtype=float)
    if Q.size == 0 and n == 0:
        Q = np.zeros((0, 0))
    if Q.ndim != 2 or Q.shape != (n, n):
        raise DimensionMismatch(f"Q has shape {Q.shape}, expected ({n}, {n})")
    A = _matrix(A, n, "A")
    b = _vector(b, A.shape[0], "b")
    G = _matrix(G, n, "G")
    h = _vector(h, G.shape[0], "h")

    for name, arr in (("Q", Q), ("c", c), ("A", A), ("b", b), ("G", G), ("h", h)):
        if not np.all(np.isfinite(arr)):
            raise NonFinite(f"{name} contains NaN or Inf")

    if n:
        asym = float(np.max(np.abs(Q - Q.T)))
        if asym > SYMMETRY_TOL:
            raise NotSymmetric(f"Q is not symmetric (max |Q - Q'| = {asym:.3e})")
        Q = 0.5 * (Q + Q.T)
        if np.any(Q):
            min_eig = float(np.linalg.eigvalsh(Q)[0])
            if min_eig < -PSD_TOL:
                raise NotPsd(min_eig)

    return CanonicalQp(_frozen(Q), _frozen(c), _frozen(A), _frozen(b), _frozen(G), _frozen(h), maximize)


# ---------------------------------------------------------------------------
# row labels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RowRef:
    kind: str   # "ineq" or "eq"
    index: int  # position inside its block
    label: str


@dataclass(frozen=True)
class RowMap:
    """Names for every variable and constraint row of a CanonicalQp.

    Raw row indices are global: inequality rows come first
    (``0 .. m_ineq-1``), then equality rows.
    """

    variables: tuple[str, ...]
    ineq_rows: tuple[str, ...]
    eq_rows: tuple[str, ...]
    balance: tuple[tuple[str, int], ...] = ()  # (bus id, equality row index)
    _lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = self.ineq_rows + self.eq_rows
        if len(set(labels)) != len(labels):
            dup = sorted({x for x in labels if labels.count(x) > 1})
            raise ValueError(f"duplicate row labels: {dup}")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable labels")
        lookup = {lab: RowRef("ineq", i, lab) for i, lab in enumerate(self.ineq_rows)}
        lookup.update({lab: RowRef("eq", i, lab) for i, lab in enumerate(self.eq_rows)})
        object.__setattr__(self, "_lookup", lookup)

    @classmethod
    def generic(cls, qp: CanonicalQp) -> "RowMap":
        """Positional labels ``x[j]``, ``ineq[i]``, ``eq[i]`` for a bare QP."""
        return cls(
            tuple(f"x[{j}]" for j in range(qp.n)),
            tuple(f"ineq[{i}]" for i in range(qp.m_ineq)),
            tuple(f"eq[{i}]" for i in range(qp.m_eq)),
        )

    @property
    def rows(self) -> tuple[str, ...]:
        return self.ineq_rows + self.eq_rows

    def row(self, ref) -> RowRef:
        """Resolve a label or a global raw index."""
        if isinstance(ref, RowRef):
            ref = ref.label
        if isinstance(ref, (int, np.integer)) and not isinstance(ref, bool):
            k = int(ref)
            if 0 <= k < len(self.ineq_rows):
                return RowRef("ineq", k, self.ineq_rows[k])
            k -= len(self.ineq_rows)
            if 0 <= k < len(self.eq_rows):
                return RowRef("eq", k, self.eq_rows[k])
            raise UnknownRow(ref)
        try:
            return self._lookup[ref]
        except (KeyError, TypeError):
            raise UnknownRow(ref) from None

    def var(self, label: str) -> int:
        try:
            return self.variables.index(label)
        except ValueError:
            raise KeyError(label) from None

    def balance_row(self, bus: str) -> RowRef:
        for bus_id, idx in self.balance:
            if bus_id == bus:
                return RowRef("eq", idx, self.eq_rows[idx])
        raise UnknownRow(f"balance[{bus}]")

    def check(self, qp: CanonicalQp) -> None:
        if (len(self.variables), len(self.ineq_rows), len(self.eq_rows)) != (qp.n, qp.m_ineq, qp.m_eq):
            raise DimensionMismatch(
                f"row map sizes ({len(self.variables)}, {len(self.ineq_rows)}, {len(self.eq_rows)}) "
                f"do not match QP ({qp.n}, {qp.m_ineq}, {qp.m_eq})"
            )


# ---------------------------------------------------------------------------
# dispatch cases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bus:
    id: str


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    a: float
    q: float = 0.0
    pmin: float = 0.0
    pmax: float | None = None


@dataclass(frozen=True)
class Load:
    """Flexible load with benefit per unit, or a fixed demand (pmin == pmax)."""

    id: str
    bus: str
    benefit: float = 0.0
    pmin: float = 0.0
    pmax: float | None = None
    fixed: bool = False


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    susceptance: float
    limit: float


@dataclass(frozen=True)
class CapEntry:
    bus: str
    price: float


@dataclass(frozen=True)
class DispatchCase:
    sense: str = "max"
    buses: tuple[Bus, ...] = ()
    generators: tuple[Generator, ...] = ()
    loads: tuple[Load, ...] = ()
    lines: tuple[Line, ...] = ()
    caps: tuple[CapEntry, ...] = ()

    def __post_init__(self):
        _check_case(self)


def _check_case(case: DispatchCase) -> None:
    if case.sense not in ("max", "min"):
        raise SchemaViolation("sense", f"must be 'max' or 'min', got {case.sense!r}")
    bus_ids = [bus.id for bus in case.buses]
    if len(set(bus_ids)) != len(bus_ids):
        raise SchemaViolation("buses", "bus ids must be unique")
    known = set(bus_ids)
    for group, items in (("generators", case.generators), ("loads", case.loads), ("lines", case.lines)):
        ids = [it.id for it in items]
        if len(set(ids)) != len(ids):
            raise SchemaViolation(group, "ids must be unique")
    for i, g in enumerate(case.generators):
        if g.bus not in known:
            raise SchemaViolation(f"generators[{i}].bus", f"unknown bus {g.bus!r}")
        if g.q < 0:
            raise SchemaViolation(f"generators[{i}].q", "quadratic cost must be >= 0")
        if g.pmax is not None and g.pmin > g.pmax:
            raise SchemaViolation(f"generators[{i}].pmin", f"pmin {g.pmin} exceeds pmax {g.pmax}")
    for i, load in enumerate(case.loads):
        if load.bus not in known:
            raise SchemaViolation(f"loads[{i}].bus", f"unknown bus {load.bus!r}")
        if load.pmax is not None and load.pmin > load.pmax:
            raise SchemaViolation(f"loads[{i}].pmin", f"pmin {load.pmin} exceeds pmax {load.pmax}")
        if load.fixed and load.pmax != load.pmin:
            raise SchemaViolation(f"loads[{i}].pmax", "fixed load needs pmin == pmax")
    for i, line in enumerate(case.lines):
        for attr, key in (("from_bus", "from"), ("to_bus", "to")):
            if getattr(line, attr) not in known:
                raise SchemaViolation(f"lines[{i}].{key}", f"unknown bus {getattr(line, attr)!r}")
        if line.from_bus == line.to_bus:
            raise SchemaViolation(f"lines[{i}].to", "line endpoints must differ")
        if not line.susceptance > 0:
            raise SchemaViolation(f"lines[{i}].susceptance", "must be > 0")
        if not line.limit > 0:
            raise SchemaViolation(f"lines[{i}].limit", "must be > 0")
    seen = set()
    for i, cap in enumerate(case.caps):
        if cap.bus not in known:
            raise SchemaViolation(f"caps[{i}].bus", f"unknown bus {cap.bus!r}")
        if cap.bus in seen:
            raise SchemaViolation(f"caps[{i}].bus", f"second cap on bus {cap.bus!r}")
        seen.add(cap.bus)


def compile_dispatch(case: DispatchCase) -> tuple[CanonicalQp, RowMap]:
    """Compile a dispatch case to a CanonicalQp plus its RowMap.

    Variables are generator outputs ``pg[*]``, flexible load levels
    ``pl[*]`` and bus angles ``theta[*]``.  Angles exist only for buses
    touched by a line; the first bus of each line-connected group is pinned
    to zero by an ``angle_ref[*]`` equality row.  Generator cost is
    ``a*p + q*p**2``; loads contribute ``-benefit*p``.  Fixed loads enter
    the balance right-hand side only.
    """
    gens, lines = case.generators, case.lines
    flex = [ld for ld in case.loads if not ld.fixed]
    bus_pos = {bus.id: k for k, bus in enumerate(case.buses)}

    angle_buses = []
    for bus in case.buses:
        if any(bus.id in (ln.from_bus, ln.to_bus) for ln in lines):
            angle_buses.append(bus.id)
    theta_pos = {bus: k for k, bus in enumerate(angle_buses)}

    ng, nl, na = len(gens), len(flex), len(angle_buses)
    n = ng + nl + na
    variables = ([f"pg[{g.id}]" for g in gens] + [f"pl[{ld.id}]" for ld in flex]
                 + [f"theta[{b}]" for b in angle_buses])

    Q = np.zeros((n, n))
    c = np.zeros(n)
    for k, g in enumerate(gens):
        c[k] = g.a
        Q[k, k] = 2.0 * g.q
    for k, ld in enumerate(flex):
        c[ng + k] = -ld.benefit

    ineq_rows: list[np.ndarray] = []
    ineq_rhs: list[float] = []
    ineq_labels: list[str] = []

    def add_ineq(coeffs: dict[int, float], rhs: float, label: str):
        row = np.zeros(n)
        for j, v in coeffs.items():
            row[j] += v
        ineq_rows.append(row)
        ineq_rhs.append(rhs)
        ineq_labels.append(label)

    for k, ld in enumerate(flex):
        add_ineq({ng + k: -1.0}, 0.0 - ld.pmin, f"load_lb[{ld.id}]")
        if ld.pmax is not None:
            add_ineq({ng + k: 1.0}, ld.pmax, f"load_ub[{ld.id}]")
    for k, g in enumerate(gens):
        add_ineq({k: -1.0}, 0.0 - g.pmin, f"gen_lb[{g.id}]")
        if g.pmax is not None:
            add_ineq({k: 1.0}, g.pmax, f"gen_ub[{g.id}]")
    for ln in lines:
        i, j = ng + nl + theta_pos[ln.from_bus], ng + nl + theta_pos[ln.to_bus]
        bsus = ln.susceptance
        add_ineq({i: bsus, j: -bsus}, ln.limit, f"line_limit[{ln.id},+]")
        add_ineq({i: -bsus, j: bsus}, ln.limit, f"line_limit[{ln.id},-]")

    nb = len(case.buses)
    G_bal = np.zeros((nb, n))
    h_bal = np.zeros(nb)
    for k, g in enumerate(gens):
        G_bal[bus_pos[g.bus], k] -= 1.0
    for k, ld in enumerate(flex):
        G_bal[bus_pos[ld.bus], ng + k] += 1.0
    for ld in case.loads:
        if ld.fixed:
            h_bal[bus_pos[ld.bus]] -= ld.pmax
    for ln in lines:
        f, t = bus_pos[ln.from_bus], bus_pos[ln.to_bus]
        i, j = ng + nl + theta_pos[ln.from_bus], ng + nl + theta_pos[ln.to_bus]
        # flow from -> to is B*(theta_from - theta_to); it leaves f and enters t
        G_bal[f, i] += ln.susceptance
        G_bal[f, j] -= ln.susceptance
        G_bal[t, i] -= ln.susceptance
        G_bal[t, j] += ln.susceptance

    refs = []
    for group in _line_components(angle_buses, lines):
        row = np.zeros(n)
        row[ng + nl + theta_pos[group[0]]] = 1.0
        refs.append((row, group[0]))

    eq_labels = [f"balance[{bus.id}]" for bus in case.buses] + [f"angle_ref[{b}]" for _, b in refs]
    G = np.vstack([G_bal] + [r[None, :] for r, _ in refs]) if refs else G_bal
    h = np.concatenate([h_bal, np.zeros(len(refs))])

    _warn_islanded(case)

    A = np.array(ineq_rows) if ineq_rows else np.zeros((0, n))
    maximize = case.sense == "max"
    qp = build_qp(Q, c, A, np.array(ineq_rhs), G, h, maximize=maximize)
    rowmap = RowMap(
        tuple(variables), tuple(ineq_labels), tuple(eq_labels),
        tuple((bus.id, k) for k, bus in enumerate(case.buses)),
    )
    return qp, rowmap


def _line_components(buses: Sequence[str], lines: Iterable[Line]) -> list[list[str]]:
    parent = {b: b for b in buses}

    def find(b):
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        return b

    for ln in lines:
        ra, rb = find(ln.from_bus), find(ln.to_bus)
        if ra != rb:
            parent[max(ra, rb, key=buses.index)] = min(ra, rb, key=buses.index)
    groups: dict[str, list[str]] = {}
    for b in buses:
        groups.setdefault(find(b), []).append(b)
    return list(groups.values())


def _warn_islanded(case: DispatchCase) -> None:
    bus_ids = [b.id for b in case.buses]
    comps = _line_components(bus_ids, case.lines)
    with_gen = {g.bus for g in case.generators}
    demand = {}
    for ld in case.loads:
        if ld.fixed and ld.pmax:
            demand[ld.bus] = demand.get(ld.bus, 0.0) + ld.pmax
    for comp in comps:
        if not with_gen.intersection(comp):
            for bus in comp:
                if demand.get(bus):
                    warnings.warn(f"bus {bus} has fixed demand but no path to a generator",
                                  IslandedBusWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# case files
# ---------------------------------------------------------------------------

_NUM = {"type": "number"}
_ID = {"type": "string", "minLength": 1}

CASE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "dispatch case",
    "description": "Power in kW and prices in $/kWh by convention; any consistent units work.",
    "type": "object",
    "additionalProperties": False,
    "required": ["buses"],
    "properties": {
        "sense": {"enum": ["max", "min"]},
        "buses": {
            "type": "array",
            "items": {"type": "object", "additionalProperties": False,
                      "required": ["id"], "properties": {"id": _ID}},
        },
        "generators": {
            "type": "array",
            "items": {
                "type": "object", "additionalProperties": False,
                "required": ["id", "bus", "a"],
                "properties": {"id": _ID, "bus": _ID, "a": _NUM, "q": _NUM,
                               "pmin": _NUM, "pmax": _NUM},
            },
        },
        "loads": {
            "type": "array",
            "items": {
                "type": "object", "additionalProperties": False,
                "required": ["id", "bus"],
                "properties": {"id": _ID, "bus": _ID, "benefit": _NUM, "pmin": _NUM,
                               "pmax": _NUM, "fixed": {"type": "boolean"}},
            },
        },
        "lines": {
            "type": "array",
            "items": {
                "type": "object", "additionalProperties": False,
                "required": ["id", "from", "to", "susceptance", "limit"],
                "properties": {"id": _ID, "from": _ID, "to": _ID,
                               "susceptance": _NUM, "limit": _NUM},
            },
        },
        "caps": {
            "type": "array",
            "items": {"type": "object", "additionalProperties": False,
                      "required": ["bus", "price"], "properties": {"bus": _ID, "price": _NUM}},
        },
    },
}


def _json_path(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "$"


def case_from_dict(data: dict) -> DispatchCase:
    """Validate a parsed case document and build a DispatchCase."""
    validator = jsonschema.Draft202012Validator(CASE_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        path = _json_path(err.absolute_path)
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            if extra:
                path = f"{path}.{extra[0]}" if path != "$" else extra[0]
        raise SchemaViolation(path, err.message)
    for group in ("generators", "loads", "lines", "caps"):
        for i, item in enumerate(data.get(group, [])):
            for key, val in item.items():
                if isinstance(val, float) and not np.isfinite(val):
                    raise SchemaViolation(f"{group}[{i}].{key}", "must be finite")

    loads = []
    for i, d in enumerate(data.get("loads", [])):
        fixed = bool(d.get("fixed", False))
        pmin, pmax = d.get("pmin"), d.get("pmax")
        if fixed:
            if pmin is None and pmax is None:
                raise SchemaViolation(f"loads[{i}].pmax", "fixed load needs a demand (pmin or pmax)")
            pmin = pmax if pmin is None else pmin
            pmax = pmin if pmax is None else pmax
        loads.append(Load(d["id"], d["bus"], float(d.get("benefit", 0.0)),
                          float(0.0 if pmin is None else pmin),
                          None if pmax is None else float(pmax), fixed))
    return DispatchCase(
        sense=data.get("sense", "max"),
        buses=tuple(Bus(b["id"]) for b in data["buses"]),
        generators=tuple(
            Generator(g["id"], g["bus"], float(g["a"]), float(g.get("q", 0.0)),
                      float(g.get("pmin", 0.0)), None if g.get("pmax") is None else float(g["pmax"]))
            for g in data.get("generators", [])
        ),
        loads=tuple(loads),
        lines=tuple(
            Line(ln["id"], ln["from"], ln["to"], float(ln["susceptance"]), float(ln["limit"]))
            for ln in data.get("lines", [])
        ),
        caps=tuple(CapEntry(cp["bus"], float(cp["price"])) for cp in data.get("caps", [])),
    )


def case_to_dict(case: DispatchCase) -> dict:
    def gen(g: Generator):
        d = {"id": g.id, "bus": g.bus, "a": g.a, "q": g.q, "pmin": g.pmin}
        if g.pmax is not None:
            d["pmax"] = g.pmax
        return d

    def load(ld: Load):
        d = {"id": ld.id, "bus": ld.bus, "benefit": ld.benefit, "pmin": ld.pmin}
        if ld.pmax is not None:
            d["pmax"] = ld.pmax
        d["fixed"] = ld.fixed
        return d

    out = {
        "sense": case.sense,
        "buses": [{"id": b.id} for b in case.buses],
        "generators": [gen(g) for g in case.generators],
        "loads": [load(ld) for ld in case.loads],
        "lines": [{"id": ln.id, "from": ln.from_bus, "to": ln.to_bus,
                   "susceptance": ln.susceptance, "limit": ln.limit} for ln in case.lines],
    }
    if case.caps:
        out["caps"] = [{"bus": cp.bus, "price": cp.price} for cp in case.caps]
    return out


def load_case(path) -> DispatchCase:
    """Read a JSON case file.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    ParseError
        Malformed JSON (carries the line number).
    SchemaViolation
        Structural or semantic problem (carries the field path, e.g.
        ``loads[0].pmin``).
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from None
    return case_from_dict(data)


def write_case(case: DispatchCase, path) -> None:
    Path(path).write_text(json.dumps(case_to_dict(case), indent=2) + "\n", encoding="utf-8")
