"""Deterministic benchmark circuits: QFT, ripple-carry adder, supremacy-style
random circuits, GHZ chains and MaxCut QAOA."""
from __future__ import annotations

import math

import networkx as nx
import numpy as np

from .circuit import Circuit, CircuitBuilder, CircuitError, ObservableSpec


def gen_ghz(n: int) -> Circuit:
    if n < 1:
        raise CircuitError("GHZ needs n >= 1")
    b = CircuitBuilder(n).add("h", 0)
    for q in range(n - 1):
        b.add("cx", q, q + 1)
    return b.build()


def gen_qft(n: int) -> Circuit:
    """QFT without the terminal swap network.

    Output qubit ``j`` therefore holds the bit that a textbook QFT would place
    on qubit ``n-1-j``.
    """
    if n < 1:
        raise CircuitError("QFT needs n >= 1")
    b = CircuitBuilder(n)
    for j in range(n):
        b.add("h", j)
        for k in range(j + 1, n):
            b.add("cp", j, k, params=(math.pi / 2 ** (k - j),))
    return b.build()


def _ccx(b: CircuitBuilder, c1: int, c2: int, t: int) -> None:
    # standard 6-CNOT Toffoli; tdg is written as rz(-pi/4), equal up to global phase
    tdg = dict(params=(-math.pi / 4,))
    b.add("h", t).add("cx", c2, t).add("rz", t, **tdg).add("cx", c1, t)
    b.add("t", t).add("cx", c2, t).add("rz", t, **tdg).add("cx", c1, t)
    b.add("t", c2).add("t", t).add("h", t)
    b.add("cx", c1, c2).add("t", c1).add("rz", c2, **tdg).add("cx", c1, c2)


def adder_layout(bits: int) -> dict[str, list[int] | int]:
    """Qubit roles of :func:`gen_adder`: carry-in, interleaved b_i/a_i, carry-out."""
    return {
        "cin": 0,
        "b": [1 + 2 * i for i in range(bits)],
        "a": [2 + 2 * i for i in range(bits)],
        "cout": 2 * bits + 1,
    }


def gen_adder(bits: int) -> Circuit:
    """Cuccaro ripple-carry adder on 2*bits+2 qubits; computes b <- a+b, cout ^= carry."""
    if bits < 1:
        raise CircuitError("adder needs bits >= 1")
    lay = adder_layout(bits)
    a, bq, cin, cout = lay["a"], lay["b"], lay["cin"], lay["cout"]
    b = CircuitBuilder(2 * bits + 2)

    def maj(c, y, x):
        b.add("cx", x, y).add("cx", x, c)
        _ccx(b, c, y, x)

    def uma(c, y, x):
        _ccx(b, c, y, x)
        b.add("cx", x, c).add("cx", c, y)

    carries = [cin] + a[:-1]
    for i in range(bits):
        maj(carries[i], bq[i], a[i])
    b.add("cx", a[-1], cout)
    for i in reversed(range(bits)):
        uma(carries[i], bq[i], a[i])
    return b.build()


def grid_shape(n: int) -> tuple[int, int]:
    cols = math.ceil(math.sqrt(n))
    return math.ceil(n / cols), cols


def supremacy_pairs(n: int, pattern: int) -> list[tuple[int, int]]:
    """Nearest-neighbour pairs activated in one of the four coupler patterns."""
    rows, cols = grid_shape(n)
    pairs = []
    horizontal = pattern in (0, 2)
    offset = 0 if pattern in (0, 1) else 1
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if horizontal:
                if c % 2 == offset and c + 1 < cols and q + 1 < n:
                    pairs.append((q, q + 1))
            elif r % 2 == offset and q + cols < n:
                pairs.append((q, q + cols))
    return pairs


def gen_supremacy(n: int, depth: int, seed: int) -> Circuit:
    """Seeded random circuit on a near-square grid.

    Each cycle applies CZ on one of four coupler patterns, then a random gate
    from {sqrt(X), sqrt(Y), T} on every qubit, never repeating a qubit's
    previous choice.
    """
    if n < 2:
        raise CircuitError("supremacy circuit needs n >= 2")
    if depth < 0:
        raise CircuitError("depth must be >= 0")
    rng = np.random.default_rng(seed)
    b = CircuitBuilder(n)
    for q in range(n):
        b.add("h", q)
    last = [-1] * n
    choices = [("sx", ()), ("ry", (math.pi / 2,)), ("t", ())]
    for cycle in range(depth):
        for u, v in supremacy_pairs(n, cycle % 4):
            b.add("cz", u, v)
        for q in range(n):
            k = int(rng.integers(3))
            while k == last[q]:
                k = int(rng.integers(3))
            last[q] = k
            name, params = choices[k]
            b.add(name, q, params=params)
    return b.build()


def make_graph(kind: str, n: int, seed: int, m: int = 3, p: float = 0.1,
               connected: bool = True) -> nx.Graph:
    """Build a REG/ERD/BAR graph. With ``connected`` the seed is advanced until
    the sample is connected (deterministic for a given seed)."""
    kind = kind.upper()
    if kind == "REG" and (n * m % 2 or m >= n):
        raise CircuitError(f"no {m}-regular graph on {n} nodes")
    if kind == "BAR" and not 1 <= m < n:
        raise CircuitError("BAR needs 1 <= m < n")
    if kind == "ERD" and not 0 < p <= 1:
        raise CircuitError("ERD needs 0 < p <= 1")
    for attempt in range(1000):
        s = seed + 7919 * attempt
        if kind == "REG":
            g = nx.random_regular_graph(m, n, seed=s)
        elif kind == "ERD":
            g = nx.erdos_renyi_graph(n, p, seed=s)
        elif kind == "BAR":
            g = nx.barabasi_albert_graph(n, m, seed=s)
        else:
            raise CircuitError(f"unknown graph kind {kind!r}")
        if not connected or nx.is_connected(g):
            return g
    raise CircuitError(f"could not sample a connected {kind} graph")


def maxcut_observable(n: int, edges) -> ObservableSpec:
    """Cut size: sum over edges of (1 - Z_u Z_v)/2."""
    terms = []
    for u, v in edges:
        s = ["I"] * n
        s[u] = s[v] = "Z"
        terms.append((-0.5, "".join(s)))
    return ObservableSpec(tuple(terms), 0.5 * len(terms))


def gen_qaoa(kind: str, n: int, rounds: int = 1, seed: int = 0, *, m: int = 3,
             p: float = 0.1, gammas=None, betas=None) -> Circuit:
    if rounds < 1:
        raise CircuitError("rounds must be >= 1")
    g = make_graph(kind, n, seed, m=m, p=p)
    edges = sorted(tuple(sorted(e)) for e in g.edges())
    rng = np.random.default_rng(seed)
    if gammas is None:
        gammas = rng.uniform(0.1, math.pi / 2, rounds)
    if betas is None:
        betas = rng.uniform(0.1, math.pi / 2, rounds)
    b = CircuitBuilder(n)
    for q in range(n):
        b.add("h", q)
    for r in range(rounds):
        for u, v in edges:
            b.add("rzz", u, v, params=(2 * float(gammas[r]),))
        for q in range(n):
            b.add("rx", q, params=(2 * float(betas[r]),))
    return b.build(maxcut_observable(n, edges))


def _kv(text: str) -> dict[str, str]:
    out = {}
    for part in filter(None, text.split(",")):
        k, _, v = part.partition("=")
        out[k.strip().lower()] = v.strip()
    return out


def from_spec(spec: str) -> Circuit:
    """Build a circuit from a generator spec such as ``qft:n=15``,
    ``adder:bits=7``, ``spm:n=15,depth=8,seed=1``, ``ghz:n=5`` or
    ``qaoa:kind=REG,m=2,n=7,rounds=1,seed=0``."""
    name, _, rest = spec.partition(":")
    kw = _kv(rest)
    name = name.strip().lower()
    try:
        if name == "qft":
            return gen_qft(int(kw["n"]))
        if name == "ghz":
            return gen_ghz(int(kw["n"]))
        if name in ("adder", "add"):
            return gen_adder(int(kw["bits"]))
        if name in ("spm", "supremacy"):
            return gen_supremacy(int(kw["n"]), int(kw.get("depth", 8)), int(kw.get("seed", 0)))
        if name == "qaoa":
            return gen_qaoa(kw.get("kind", "REG"), int(kw["n"]), int(kw.get("rounds", 1)),
                            int(kw.get("seed", 0)), m=int(kw.get("m", 3)), p=float(kw.get("p", 0.1)))
    except KeyError as e:
        raise CircuitError(f"generator spec {spec!r} is missing {e.args[0]!r}") from None
    raise CircuitError(f"unknown generator {name!r}")
