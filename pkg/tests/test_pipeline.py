import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrcut.cli import main
from qrcut.pipeline import (
    EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, PipelineConfig, PipelineError, reproduce_tables,
    run_pipeline,
)
from qrcut.reconstruct import AttributedTensor, contract_cut, kron_combine, merge_contract


def test_cli_full_run(tmp_path, capsys):
    code = main(["--gen", "ghz:n=5", "-N", "3", "--out", str(tmp_path), "--format", "json"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    row = doc["rows"][0]
    assert row["#Cuts"] >= 1 and row["error"] < 1e-9
    assert {p.name for p in tmp_path.iterdir()} == {"plan.json", "results.json", "reconstruction.json"}


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["--gen", "ghz:n=5", "-N", "3", "--subcircuits", "1:1"]) == EXIT_INFEASIBLE
    assert main(["--bogus"]) == EXIT_USAGE
    assert main(["--gen", "nosuch:n=3"]) == EXIT_USAGE
    assert main(["--mode", "run"]) == EXIT_USAGE
    assert main(["--gen", "ghz:n=4", "-N", "2", "--out", str(tmp_path)]) == EXIT_OK
    rec = json.loads((tmp_path / "reconstruction.json").read_text())
    rec["value"][0] += 1e-3
    (tmp_path / "reconstruction.json").write_text(json.dumps(rec))
    assert main(["--mode", "verify", "--out", str(tmp_path)]) == EXIT_VERIFY
    capsys.readouterr()


def test_phases_reproduce_full_run(tmp_path):
    full, split = tmp_path / "full", tmp_path / "split"
    run_pipeline(PipelineConfig(gen="qft:n=4", device_size=3, out_dir=str(full)))
    run_pipeline(PipelineConfig(gen="qft:n=4", device_size=3, out_dir=str(split), mode="plan"))
    for mode in ("run", "reconstruct", "verify"):
        run_pipeline(PipelineConfig(device_size=3, out_dir=str(split), mode=mode))
    for name in ("plan.json", "results.json", "reconstruction.json"):
        assert (full / name).read_bytes() == (split / name).read_bytes()


def test_missing_phase_input(tmp_path):
    with pytest.raises(PipelineError, match="missing"):
        run_pipeline(PipelineConfig(out_dir=str(tmp_path), mode="run"))


def test_export_lp(tmp_path):
    path = tmp_path / "m.lp"
    assert main(["--gen", "ghz:n=4", "-N", "2", "--mode", "plan", "--export-lp", str(path)]) == EXIT_OK
    text = path.read_text()
    assert text.startswith("\\") or "Minimize" in text
    assert "Subject To" in text and "End" in text


def test_gate_cuts_need_observable():
    with pytest.raises(PipelineError, match="observable"):
        run_pipeline(PipelineConfig(gen="ghz:n=4", device_size=2, enable_gate_cuts=True))


def test_size_guard():
    with pytest.raises(PipelineError, match="instances"):
        run_pipeline(PipelineConfig(gen="ghz:n=5", device_size=3, max_instances=3))
    with pytest.raises(PipelineError, match="cells"):
        run_pipeline(PipelineConfig(gen="ghz:n=5", device_size=3, max_tensor_cells=8))


def test_reproduce_table2_deterministic():
    a = reproduce_tables("table2_like", node_limit=5, time_limit=60)
    b = reproduce_tables("table2_like", node_limit=5, time_limit=60)
    strip = lambda rep: [{k: v for k, v in r.items() if k != "gap"} for r in rep.rows]
    assert strip(a) == strip(b)
    assert len(a.rows) == 6 and all("not directly comparable" in n for n in a.notes)
    for r in a.rows:
        assert r["#SC"] == 2
        if "[W]" in r["name"]:
            assert r["#G-cuts"] == 0


def test_adder_matches_published_shape():
    rep, art = run_pipeline(PipelineConfig(gen="adder:bits=7", device_size=7, subcircuits=(2, 4), mode="plan",
                                           node_limit=30, time_limit=45))
    row = rep.rows[0]
    assert row["#SC"] <= 4 and row["#Cuts"] <= 4 and all(s.physical_width <= 7 for s in art["plan"].subcircuits)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.booleans())
def test_merge_contract_matches_kron_then_contract(seed, batch):
    rng = np.random.default_rng(seed)
    w1, w2 = rng.normal(size=4), rng.normal(size=6)
    extra = ("terms",) if batch else ()
    ea = (3,) if batch else ()
    a = AttributedTensor(rng.normal(size=(2, 4, 6) + ea), (0, ("w", "up"), ("g", "top")) + extra)
    b = AttributedTensor(rng.normal(size=(6, 2, 4) + ea), (("g", "bottom"), 1, ("w", "down")) + extra)
    cuts = [(("w", "up"), ("w", "down"), w1), (("g", "bottom"), ("g", "top"), w2)]
    fused = merge_contract(a, b, cuts)
    naive = kron_combine(a, b)
    for first, second, w in cuts:
        naive = contract_cut(naive, first, second, w)
    assert fused.labels == naive.labels
    np.testing.assert_allclose(fused.data, naive.data, atol=1e-12)
