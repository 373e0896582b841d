import json

import numpy as np
import pytest

from tspvqa.cli import (
    MATRIX_FORMAT,
    PROBLEM_FORMAT,
    TRACE_FORMAT,
    dump_problem,
    load_problem,
    main,
    read_trace,
)
from tspvqa.measurement import assert_doubly_stochastic, sampling_tolerance
from tspvqa.oracle import route_to_matrix

VALID_4 = [[1, 2, 3, 4], [1, 2, 4, 3], [1, 3, 2, 4], [1, 3, 4, 2], [1, 4, 2, 3], [1, 4, 3, 2]]


@pytest.fixture
def equal4(tmp_path):
    path = tmp_path / "equal.json"
    dump_problem(np.full((4, 4), 5.0), str(path))
    return str(path)


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(path)


def test_solve_exact_all_equal(equal4, tmp_path, capsys):
    out = str(tmp_path / "t.jsonl")
    assert main(["solve", equal4, "--exact", "--starts", "3", "--out", out]) == 0
    recs = read_trace(out)
    assert recs[0]["format"] == TRACE_FORMAT and recs[0]["type"] == "header"
    final = recs[-1]
    assert final["type"] == "final" and final["route"] in VALID_4 and final["length"] == 20.0
    iters = [r["iteration"] for r in recs if r["type"] == "iteration"]
    assert iters == sorted(set(iters))
    x = np.array(final["x"])
    assert assert_doubly_stochastic(x, 1e-10)
    assert capsys.readouterr().out == ""


def test_sampled_traces_are_byte_identical(equal4, tmp_path):
    paths = [str(tmp_path / f"{k}.jsonl") for k in range(2)]
    codes = [main(["solve", equal4, "--shots", "2000", "--seed", "7", "--starts", "2",
                   "--max-iters", "50", "--out", p]) for p in paths]
    assert codes[0] == codes[1] and codes[0] in (0, 2)
    blobs = [open(p, "rb").read() for p in paths]
    assert blobs[0] == blobs[1]
    final = read_trace(paths[0])[-1]
    assert assert_doubly_stochastic(np.array(final["x"]), sampling_tolerance(4, 2000))


def test_seed_env_fallback(equal4, tmp_path, monkeypatch):
    args = ["solve", equal4, "--shots", "500", "--starts", "1", "--max-iters", "20"]
    monkeypatch.setenv("TSPVQA_SEED", "11")
    main(args + ["--out", str(tmp_path / "env.jsonl")])
    main(args + ["--seed", "11", "--out", str(tmp_path / "flag.jsonl")])
    assert (tmp_path / "env.jsonl").read_bytes() == (tmp_path / "flag.jsonl").read_bytes()
    monkeypatch.setenv("TSPVQA_SEED", "eleven")
    assert main(args) == 1


def test_stdout_is_the_trace(equal4, capsys):
    assert main(["solve", equal4, "--exact", "--starts", "1", "--max-iters", "5"]) == 2
    captured = capsys.readouterr()
    lines = [json.loads(l) for l in captured.out.splitlines()]
    assert lines[0]["type"] == "header" and lines[-1]["type"] == "final"
    assert "did not converge" in captured.err


def test_two_cities_rejected(tmp_path, capsys):
    path = write(tmp_path, "n2.json", {"format": PROBLEM_FORMAT, "n": 2, "D": [[0, 1], [1, 0]]})
    assert main(["solve", path, "--exact"]) == 1
    assert "no fixed-point-free tour exists" in capsys.readouterr().err


@pytest.mark.parametrize("doc,fragment", [
    ('{"format": "tspvqa-problem/1", "n": 3, "D": [[0,1],[1,0]]}', "'n'"),
    ('{"format": "tspvqa-problem/1", "n": 2, "D": [[0,1],[1]]}', "row 2"),
    ('{"format": "tspvqa-problem/1", "n": 2, "D": [[0,-1],[1,0]]}', "negative"),
    ('{"format": "other", "n": 2, "D": [[0,1],[1,0]]}', "format"),
    ('{"format": "tspvqa-problem/1",\n "n": 2,', "2:"),
    ('{"format": "tspvqa-problem/1", "n": 3, "D": [[0,1,1],[1,0,1],[1,1,0]], "a_sub": -2}', "a_sub"),
])
def test_malformed_problem_files(tmp_path, capsys, doc, fragment):
    path = write(tmp_path, "bad.json", doc)
    assert main(["solve", path, "--exact"]) == 1
    assert fragment in capsys.readouterr().err


def test_problem_round_trip_is_exact(tmp_path):
    d = np.array([[0, 0.1, 2.5], [1e-3, 0, 7], [3, 1 / 3, 0]])
    path = str(tmp_path / "p.json")
    dump_problem(d, path, a_sub=25)
    loaded, over = load_problem(path)
    assert np.array_equal(loaded, d) and over == {"a_sub": 25.0}


def test_missing_file(capsys):
    assert main(["oracle", "/nonexistent/p.json"]) == 1
    assert "error" in capsys.readouterr().err


def test_unknown_flag():
    assert main(["solve", "--bogus"]) == 1


def test_oracle_examples(tmp_path, capsys, equal4):
    assert main(["oracle", equal4]) == 0
    recs = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert {r["method"]: r["length"] for r in recs} == {"brute_force": 20.0, "held_karp": 20.0}
    path = write(tmp_path, "a3.json", {"format": PROBLEM_FORMAT, "n": 3, "D": [[0, 1, 9], [9, 0, 1], [1, 9, 0]]})
    assert main(["oracle", path]) == 0
    recs = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert recs[0]["route"] == [1, 2, 3] and recs[0]["length"] == 3.0


def test_oracle_large_instance_uses_held_karp(tmp_path, capsys):
    path = str(tmp_path / "n12.json")
    dump_problem(np.ones((12, 12)), path)
    assert main(["oracle", path]) == 0
    captured = capsys.readouterr()
    recs = [json.loads(l) for l in captured.out.splitlines()]
    assert [r["method"] for r in recs] == ["held_karp"] and recs[0]["length"] == 12.0
    assert "brute force skipped" in captured.err


def test_emulate_needs_four_cities(tmp_path, capsys):
    path = str(tmp_path / "n3.json")
    dump_problem(np.ones((3, 3)), path)
    assert main(["emulate", path, "--protocol", "projectors", "--exact"]) == 1
    assert "4 cities" in capsys.readouterr().err


def test_emulate_exact_matches_solve(tmp_path):
    path = str(tmp_path / "p.json")
    rng = np.random.default_rng(3)
    dump_problem(rng.integers(1, 21, (4, 4)).astype(float), path)
    a, b = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
    main(["solve", path, "--exact", "--starts", "3", "--out", a])
    main(["emulate", path, "--protocol", "projectors", "--exact", "--starts", "3", "--out", b])
    fa, fb = read_trace(a)[-1], read_trace(b)[-1]
    assert fa["route"] == fb["route"]
    assert np.allclose(fa["x"], fb["x"], atol=1e-10)


def test_birkhoff_command(tmp_path, capsys):
    x = 0.5 * route_to_matrix([1, 2, 3, 4]).matrix + 0.5 * np.eye(4)
    path = write(tmp_path, "m.json", {"format": MATRIX_FORMAT, "X": x.tolist()})
    assert main(["birkhoff", path]) == 0
    recs = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    terms = [r for r in recs if r["type"] == "term"]
    assert sorted(r["weight"] for r in terms) == [0.5, 0.5]
    assert any(r.get("route") == [1, 2, 3, 4] for r in terms)
    assert recs[-1]["residual"] <= 1e-8 and abs(recs[-1]["weight_sum"] - 1) <= 1e-10
    bad = write(tmp_path, "bad.json", {"format": MATRIX_FORMAT, "X": [[1, 0.5], [0, 1]]})
    assert main(["birkhoff", bad]) == 1


def test_version(capsys):
    assert main(["--version"]) == 0
    assert "0.1.0" in capsys.readouterr().out
