import itertools
import math

import networkx as nx
import numpy as np
import pytest

from qrcut.circuit import CircuitBuilder, CircuitError
from qrcut.generators import (
    adder_layout,
    from_spec,
    gen_adder,
    gen_ghz,
    gen_qaoa,
    gen_qft,
    gen_supremacy,
    make_graph,
    supremacy_pairs,
)
from qrcut.sim import expectation, probabilities, simulate


def test_ghz_distribution():
    p = probabilities(simulate(gen_ghz(4)))
    assert p[0] == pytest.approx(0.5) and p[-1] == pytest.approx(0.5)


@pytest.mark.parametrize("n", [3, 4])
def test_qft_matches_dft(n):
    # prepare basis state x, run the swap-free QFT, compare against the DFT with reversed qubit order
    for x in range(2**n):
        b = CircuitBuilder(n)
        for q in range(n):
            if (x >> q) & 1:
                b.add("x", q)
        c = b.build()
        c = type(c)(n, c.gates + tuple(type(g)(g.id + len(c.gates), g.name, g.qubits, g.params)
                                       for g in gen_qft(n).gates))
        amp = simulate(c).amplitudes
        # textbook input register value: qubit 0 is the most significant bit
        xv = int(format(x, f"0{n}b")[::-1], 2)
        for y in range(2**n):
            yv = y  # output qubit j holds textbook bit n-1-j, i.e. little-endian index equals value
            want = np.exp(2j * math.pi * xv * yv / 2**n) / math.sqrt(2**n)
            assert abs(amp[y] - want) < 1e-9


@pytest.mark.parametrize("bits", [1, 2])
def test_adder_adds(bits):
    lay = adder_layout(bits)
    n = 2 * bits + 2
    for a, bval in itertools.product(range(2**bits), repeat=2):
        b = CircuitBuilder(n)
        for i in range(bits):
            if (a >> i) & 1:
                b.add("x", lay["a"][i])
            if (bval >> i) & 1:
                b.add("x", lay["b"][i])
        prep = b.build()
        body = gen_adder(bits)
        gates = prep.gates + tuple(type(g)(g.id + len(prep.gates), g.name, g.qubits, g.params) for g in body.gates)
        p = probabilities(simulate(type(body)(n, gates)))
        out = int(np.argmax(p))
        assert p[out] == pytest.approx(1.0, abs=1e-9)
        total = a + bval
        got_b = sum(((out >> lay["b"][i]) & 1) << i for i in range(bits))
        got_a = sum(((out >> lay["a"][i]) & 1) << i for i in range(bits))
        assert got_b == total % 2**bits
        assert (out >> lay["cout"]) & 1 == total >> bits
        assert got_a == a


def test_supremacy_deterministic_and_patterned():
    a, b = gen_supremacy(9, 6, seed=3), gen_supremacy(9, 6, seed=3)
    assert a == b
    assert gen_supremacy(9, 6, seed=4) != a
    for pattern in range(4):
        for u, v in supremacy_pairs(9, pattern):
            assert v - u in (1, 3)
    # no qubit repeats its single-qubit gate in consecutive cycles
    singles = [[g.name + str(g.params) for g in a.gates[9:] if g.qubits == (q,)] for q in range(9)]
    for seq in singles:
        assert all(x != y for x, y in zip(seq, seq[1:]))


def test_graphs():
    g = make_graph("REG", 7, seed=0, m=2)
    assert nx.is_connected(g) and all(d == 2 for _, d in g.degree())
    with pytest.raises(CircuitError):
        make_graph("REG", 7, seed=0, m=3)
    assert make_graph("BAR", 10, seed=1, m=2).number_of_edges() == 16


def test_qaoa_observable_is_cut_size():
    c = gen_qaoa("REG", 6, seed=1, m=2)
    edges = [(g.qubits) for g in c.gates if g.name == "rzz"]
    assert len(edges) == 6
    # on a computational basis state the observable equals the cut size
    for x in (0b000000, 0b010101, 0b001011):
        b = CircuitBuilder(6)
        for q in range(6):
            if (x >> q) & 1:
                b.add("x", q)
        cut = sum(((x >> u) & 1) != ((x >> v) & 1) for u, v in edges)
        assert expectation(simulate(b.build()), c.observable) == pytest.approx(cut)


def test_from_spec():
    assert from_spec("qft:n=5").width == 5
    assert from_spec("adder:bits=7").width == 16
    assert from_spec("spm:n=15,depth=8,seed=1").width == 15
    assert from_spec("qaoa:kind=REG,m=2,n=7,rounds=1,seed=0").observable is not None
    with pytest.raises(CircuitError):
        from_spec("qft")
    with pytest.raises(CircuitError):
        from_spec("nope:n=3")
