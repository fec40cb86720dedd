import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import scalar_subsystem, single
from netlti.cli import main
from netlti.ensemble import EnsembleSpec, generate_ensemble, insert_unobservable_mode
from netlti.io import (
    DocumentError,
    load_json,
    read_model,
    read_stms,
    system_from_dict,
    system_to_dict,
    write_json,
    write_model,
)
from netlti.model import NetworkedSystem, SubsystemRealization

EXIT = {"CertifiedYes": 0, "CertifiedNo": 1, "Inconclusive": 2, "Malformed": 3}


def assert_same(a, b):
    assert np.array_equal(a.phi, b.phi)
    for s, t in zip(a.subsystems, b.subsystems):
        for name, blk in s.blocks().items():
            other = t.blocks()[name]
            assert blk.shape == other.shape
            assert np.array_equal(blk, other)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (2, 2), elements=finite),
       arrays(np.float64, (2, 1), elements=finite))
def test_round_trip_is_bit_exact(tmp_path_factory, A, B):
    sub = SubsystemRealization.create(A, A_TS=B, A_ST=B.T, A_SS=[[0.0]],
                                      C_T=B.T, n_u=0, n_v=1, n_z=1, n_y=1)
    sys = NetworkedSystem.build([sub], np.array([[1.0]]))
    path = tmp_path_factory.mktemp("rt") / "m.json"
    write_model(sys, path)
    back = read_model(path)
    assert_same(sys, back)
    write_model(back, path.with_name("m2.json"))
    assert path.read_text() == path.with_name("m2.json").read_text()


def test_round_trip_keeps_empty_blocks(tmp_path):
    for sys in generate_ensemble(EnsembleSpec(seed=7, count=20)):
        write_model(sys, tmp_path / "m.json")
        assert_same(sys, read_model(tmp_path / "m.json"))


def test_json_diagnostics(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"subsystems": [\n  {"A_TT": [[1.0]],}\n]}')
    with pytest.raises(DocumentError, match="line 2, column"):
        load_json(bad)
    with pytest.raises(DocumentError, match="cannot read"):
        load_json(tmp_path / "missing.json")
    with pytest.raises(DocumentError, match="missing field 'subsystems'"):
        system_from_dict({"phi": []})
    with pytest.raises(DocumentError, match=r"subsystems\[0\]: missing field 'A_TT'"):
        system_from_dict({"subsystems": [{"C_T": [[1.0]]}]})
    with pytest.raises(DocumentError, match=r"subsystems\[0\].A_TT: not a numeric"):
        system_from_dict({"subsystems": [{"A_TT": [["x"]]}]})


def test_read_stms_variants(tmp_path):
    write_json({"stms": [[[1.0, 0.0], [0.0, 2.0]], [[0.5]]]}, tmp_path / "a.json")
    write_json([[[0.5]]], tmp_path / "b.json")
    assert [A.shape for A in read_stms(tmp_path / "a.json")] == [(2, 2), (1, 1)]
    assert read_stms(tmp_path / "b.json")[0][0, 0] == 0.5
    write_json({"stms": [[[1.0, 2.0]]]}, tmp_path / "c.json")
    with pytest.raises(DocumentError, match="not square"):
        read_stms(tmp_path / "c.json")


@pytest.fixture
def observable_model(tmp_path):
    path = tmp_path / "obs.json"
    write_model(single(scalar_subsystem(), [[0.0]]), path)
    return path


def run(argv, tmp_path):
    out = tmp_path / "report.json"
    code = main([*argv, "--json", str(out)])
    doc = json.loads(out.read_text())
    assert EXIT[doc["status"]] == code
    return code, doc


def test_cli_validate(tmp_path, observable_model, capsys):
    code, doc = run(["validate", str(observable_model)], tmp_path)
    assert code == 0 and doc["well_posed"] is True
    bad = tmp_path / "bad.json"
    d = system_to_dict(single(scalar_subsystem(), [[0.5]]))
    write_json(d, bad)
    code, doc = run(["validate", str(bad)], tmp_path)
    assert code == 3 and "0.5 != 1" in doc["violations"][0]
    bad.write_text("{not json")
    code, doc = run(["validate", str(bad)], tmp_path)
    assert code == 3 and "line 1" in doc["error"]


def test_cli_analyze(tmp_path, observable_model, rng, capsys):
    code, doc = run(["analyze", "--mode", "observability", str(observable_model)],
                    tmp_path)
    assert code == 0
    assert doc["observability"]["status"] == "CertifiedYes"
    assert "observability] status: CertifiedYes" in capsys.readouterr().out
    bad = tmp_path / "unobs.json"
    write_model(insert_unobservable_mode(single(scalar_subsystem(), [[0.0]]), 0,
                                         0.2, rng), bad)
    code, doc = run(["analyze", str(bad)], tmp_path)
    assert code == 1
    assert doc["observability"]["necessary"]["outcome"] == "Fail"
    code, doc = run(["analyze", "--mode", "both", str(observable_model)], tmp_path)
    assert set(doc) >= {"observability", "controllability"}


def test_cli_ill_posed_is_certified_no(tmp_path):
    path = tmp_path / "ill.json"
    write_model(single(scalar_subsystem(A_SS=1.0), [[1.0]]), path)
    code, doc = run(["analyze", str(path)], tmp_path)
    assert code == 1 and "not well-posed" in doc["error"]
    code, _ = run(["lift", str(path)], tmp_path)
    assert code == 1


def test_cli_lift_and_zeros(tmp_path):
    sub = scalar_subsystem(A_TT=0.5, A_TS=0.2, A_ST=0.5, C_T=1.0, C_S=1.0)
    path = tmp_path / "z.json"
    write_model(single(sub, [[1.0]]), path)
    code, doc = run(["lift", str(path)], tmp_path)
    assert code == 0 and doc["A"] == [[pytest.approx(0.6)]]
    code, doc = run(["zeros", str(path)], tmp_path)
    assert code == 0
    assert doc["groups"][0]["lambda0"][0] == pytest.approx(0.3)
    assert doc["groups"][0]["members"] == [1]


def test_cli_min_io(tmp_path, capsys):
    stms = tmp_path / "stms.json"
    write_json({"stms": [np.diag([0.1, 0.2, 0.3]).tolist(), [[0.4]],
                         np.eye(2).tolist()]}, stms)
    code, doc = run(["min-io", str(stms)], tmp_path)
    assert code == 0 and doc["min_outputs"] == [1, 1, 2]
    code, doc = run(["min-io", str(stms), "--budget", "1,1,1"], tmp_path)
    assert code == 1 and doc["deficit"] == [0, 0, 1]
    code, _ = run(["min-io", str(stms), "--budget", "1,x"], tmp_path)
    assert code == 3


@pytest.mark.parametrize("mode", ["observability", "controllability"])
def test_cli_construct_round_trip(tmp_path, mode):
    stms = tmp_path / "stms.json"
    write_json({"stms": [[[0.5, 1.0], [0.0, -0.3]], [[0.2]], [[0.9]]]}, stms)
    model = tmp_path / "built.json"
    code, doc = run(["construct", str(stms), "--mode", mode, "--use-kappa-bound",
                     "-o", str(model)], tmp_path)
    assert code == 0 and doc["trace"]["certified_by_criterion"]
    code, doc = run(["analyze", "--mode", mode, str(model)], tmp_path)
    assert code == 0
    code, _ = run(["construct", str(stms), "--budget", "0,1,1"], tmp_path)
    assert code == 1


def test_cli_ensemble(tmp_path):
    out = tmp_path / "ens"
    code, doc = run(["ensemble", "--count", "3", "--seed", "4", "-o", str(out)],
                    tmp_path)
    assert code == 0 and doc["count"] == 3
    files = sorted(out.glob("system_*.json"))
    assert len(files) == 3
    code, _ = run(["validate", str(files[0])], tmp_path)
    assert code == 0
    code, _ = run(["ensemble", "--density", "2"], tmp_path)
    assert code == 3


def test_cli_env_tolerance_override(tmp_path, observable_model, monkeypatch):
    monkeypatch.setenv("NETLTI_RANK_TOL", "10")
    code, doc = run(["analyze", str(observable_model)], tmp_path)
    assert code == 1
    code, doc = run(["analyze", "--rank-tol", "1e-12", str(observable_model)],
                    tmp_path)
    assert code == 0
