"""Circuit IR plus a small text format.

Qubit indices are 0-based. Two-qubit gates list their qubits as (top, bottom);
for controlled gates the top qubit is the control.

Text format::

    # comment
    qreg 3;
    h 0;
    cx 0 1;
    rz 2 (pi/4);
    obs -0.5 ZZI;      # optional observable term, character i acts on qubit i
    offset 1.0;        # optional observable constant

"""
from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass

SINGLE_QUBIT_GATES = {
    "h": 0, "x": 0, "y": 0, "z": 0, "s": 0, "t": 0, "sx": 0, "id": 0,
    "rx": 1, "ry": 1, "rz": 1,
}
TWO_QUBIT_GATES = {"cx": 0, "cz": 0, "cp": 1, "rzz": 1, "swap": 0}
GATE_ALIASES = {"cnot": "cx"}


class CircuitError(ValueError):
    pass


class CircuitSyntaxError(CircuitError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class QubitOutOfRange(CircuitSyntaxError):
    pass


class UnknownGate(CircuitSyntaxError):
    pass


@dataclass(frozen=True)
class PauliExpDescriptor:
    """Two-qubit gate written as ``phase * (L_top ⊗ L_bot) * exp(i*theta*A1⊗A2)``.

    ``a1``/``a2`` are Pauli letters, so both square to the identity. The local
    factors commute with the exponential, which lets gate cutting apply them
    on either side of the six-instance expansion.
    """

    a1: str
    a2: str
    theta: float
    top_local: tuple[tuple[str, tuple[float, ...]], ...] = ()
    bottom_local: tuple[tuple[str, tuple[float, ...]], ...] = ()
    phase: float = 0.0


def pauli_exp_descriptor(name: str, params: tuple[float, ...]) -> PauliExpDescriptor | None:
    """Return the exponential-product form of a cuttable gate, or None."""
    if name in ("cz", "cp"):
        phi = math.pi if name == "cz" else params[0]
        # CP(phi) = e^{i phi/4} (rz(phi/2) ⊗ rz(phi/2)) exp(i phi/4 Z⊗Z)
        local = (("rz", (phi / 2,)),)
        return PauliExpDescriptor("Z", "Z", phi / 4, local, local, phi / 4)
    if name == "cx":
        # conjugating the CZ form by H on the target
        return PauliExpDescriptor(
            "Z", "X", math.pi / 4,
            (("rz", (math.pi / 2,)),), (("rx", (math.pi / 2,)),), math.pi / 4,
        )
    if name == "rzz":
        return PauliExpDescriptor("Z", "Z", -params[0] / 2)
    return None


@dataclass(frozen=True)
class Gate:
    id: int
    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    @property
    def kind(self) -> str:
        if self.name == "id":
            return "identity"
        return "two_qubit" if len(self.qubits) == 2 else "single"

    @property
    def descriptor(self) -> PauliExpDescriptor | None:
        if self.kind != "two_qubit":
            return None
        return pauli_exp_descriptor(self.name, self.params)

    @property
    def gate_cuttable(self) -> bool:
        return self.descriptor is not None


@dataclass(frozen=True)
class ObservableSpec:
    terms: tuple[tuple[float, str], ...]
    constant_offset: float = 0.0

    def __post_init__(self):
        for coef, pauli in self.terms:
            if not math.isfinite(coef):
                raise CircuitError(f"non-finite coefficient {coef}")
            if set(pauli) - set("IXYZ"):
                raise CircuitError(f"bad Pauli string {pauli!r}")

    @property
    def width(self) -> int | None:
        return len(self.terms[0][1]) if self.terms else None


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()
    observable: ObservableSpec | None = None

    def __post_init__(self):
        ids = [g.id for g in self.gates]
        if len(set(ids)) != len(ids):
            raise CircuitError("duplicate gate ids")
        for g in self.gates:
            arity = 1 if g.name in SINGLE_QUBIT_GATES else 2 if g.name in TWO_QUBIT_GATES else 0
            if not arity:
                raise CircuitError(f"gate {g.id}: unknown gate {g.name!r}")
            nparams = (SINGLE_QUBIT_GATES if arity == 1 else TWO_QUBIT_GATES)[g.name]
            if len(g.qubits) != arity or len(g.params) != nparams:
                raise CircuitError(f"gate {g.id}: {g.name} takes {arity} qubits and {nparams} parameters")
            if len(set(g.qubits)) != len(g.qubits):
                raise CircuitError(f"gate {g.id} repeats a qubit")
            if any(q < 0 or q >= self.width for q in g.qubits):
                raise CircuitError(f"gate {g.id} qubit out of range")
        if self.observable is not None:
            for _, pauli in self.observable.terms:
                if len(pauli) != self.width:
                    raise CircuitError("observable width does not match circuit")

    @property
    def num_two_qubit(self) -> int:
        return sum(1 for g in self.gates if g.kind == "two_qubit")


class CircuitBuilder:
    """Append-only helper used by the generators."""

    def __init__(self, width: int):
        self.width = width
        self._gates: list[Gate] = []

    def add(self, name: str, *qubits: int, params: tuple[float, ...] = ()) -> "CircuitBuilder":
        self._gates.append(Gate(len(self._gates), name, tuple(qubits), tuple(float(p) for p in params)))
        return self

    def build(self, observable: ObservableSpec | None = None) -> Circuit:
        return Circuit(self.width, tuple(self._gates), observable)


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _eval_param(text: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ValueError(text)

    return ev(ast.parse(text.strip(), mode="eval"))


_STMT = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(.*?)\s*$", re.S)


def _statements(text: str):
    """Yield (statement text, line, col) for every ';'-terminated statement."""
    clean_lines = [line.split("#", 1)[0] for line in text.splitlines()]
    buf, start = [], None
    for lineno, line in enumerate(clean_lines, 1):
        for col, ch in enumerate(line, 1):
            if ch == ";":
                yield "".join(buf), start or (lineno, col)
                buf, start = [], None
                continue
            if start is None and not ch.isspace():
                start = (lineno, col)
            buf.append(ch)
        buf.append("\n")
    rest = "".join(buf).strip()
    if rest:
        raise CircuitSyntaxError("missing ';' after statement", *start)


def parse_circuit(text: str) -> Circuit:
    width = None
    builder = None
    terms: list[tuple[float, str]] = []
    offset = 0.0
    for stmt, (line, col) in _statements(text):
        m = _STMT.match(stmt)
        if not m:
            raise CircuitSyntaxError("empty statement", line, col)
        head, rest = m.group(1).lower(), m.group(2)
        if width is None:
            if head != "qreg":
                raise CircuitSyntaxError("first statement must be 'qreg N'", line, col)
            if not re.fullmatch(r"\d+", rest) or int(rest) < 1:
                raise CircuitSyntaxError("qreg needs a positive integer", line, col)
            width = int(rest)
            builder = CircuitBuilder(width)
            continue
        if head == "qreg":
            raise CircuitSyntaxError("duplicate qreg", line, col)
        if head == "obs":
            parts = rest.split()
            if len(parts) != 2:
                raise CircuitSyntaxError("obs needs '<coef> <pauli>'", line, col)
            try:
                coef = _eval_param(parts[0])
            except (ValueError, SyntaxError, ZeroDivisionError):
                raise CircuitSyntaxError(f"bad coefficient {parts[0]!r}", line, col) from None
            if len(parts[1]) != width or set(parts[1]) - set("IXYZ"):
                raise CircuitSyntaxError(f"bad Pauli string {parts[1]!r}", line, col)
            terms.append((coef, parts[1]))
            continue
        if head == "offset":
            try:
                offset = _eval_param(rest)
            except (ValueError, SyntaxError, ZeroDivisionError):
                raise CircuitSyntaxError(f"bad offset {rest!r}", line, col) from None
            continue
        name = GATE_ALIASES.get(head, head)
        if name in SINGLE_QUBIT_GATES:
            nq, npar = 1, SINGLE_QUBIT_GATES[name]
        elif name in TWO_QUBIT_GATES:
            nq, npar = 2, TWO_QUBIT_GATES[name]
        else:
            raise UnknownGate(f"unknown gate {head!r}", line, col)
        params: tuple[float, ...] = ()
        pm = re.search(r"\((.*)\)\s*$", rest, re.S)
        if pm:
            try:
                params = tuple(_eval_param(p) for p in pm.group(1).split(","))
            except (ValueError, SyntaxError, ZeroDivisionError):
                raise CircuitSyntaxError(f"bad parameter list ({pm.group(1)})", line, col) from None
            rest = rest[: pm.start()]
        qtoks = rest.split()
        if len(qtoks) != nq or not all(re.fullmatch(r"\d+", q) for q in qtoks):
            raise CircuitSyntaxError(f"{name} takes {nq} qubit index(es)", line, col)
        if len(params) != npar:
            raise CircuitSyntaxError(f"{name} takes {npar} parameter(s)", line, col)
        qubits = tuple(int(q) for q in qtoks)
        for q in qubits:
            if q >= width:
                raise QubitOutOfRange(f"qubit {q} out of range for qreg {width}", line, col)
        if len(set(qubits)) != len(qubits):
            raise CircuitSyntaxError("repeated qubit", line, col)
        builder.add(name, *qubits, params=params)
    if builder is None:
        raise CircuitSyntaxError("missing qreg", 1, 1)
    observable = ObservableSpec(tuple(terms), offset) if terms or offset else None
    return builder.build(observable)


def emit_circuit(c: Circuit) -> str:
    lines = [f"qreg {c.width};"]
    for g in c.gates:
        s = g.name + " " + " ".join(str(q) for q in g.qubits)
        if g.params:
            s += " (" + ", ".join(repr(float(p)) for p in g.params) + ")"
        lines.append(s + ";")
    if c.observable is not None:
        for coef, pauli in c.observable.terms:
            lines.append(f"obs {float(coef)!r} {pauli};")
        if c.observable.constant_offset:
            lines.append(f"offset {float(c.observable.constant_offset)!r};")
    return "\n".join(lines) + "\n"


def gate_census(c: Circuit) -> dict[str, int]:
    out: dict[str, int] = {}
    for g in c.gates:
        out[g.name] = out.get(g.name, 0) + 1
    out["two_qubit"] = c.num_two_qubit
    return out
