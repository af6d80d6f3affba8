"""The command-line front end, exercised in-process through main()."""

import json

import pytest

from dcsharp.cli import main

from conftest import FIXTURES

CHAIN = str(FIXTURES / "chain5.dcs")
TREE = str(FIXTURES / "tree8.dcs")


@pytest.fixture
def tree_evidence(tmp_path):
    f = tmp_path / "ev.dcs"
    f.write_text("d ~= 1.\nf ~= 1.\ng ~= 0.\nh ~= 1.\n")
    return str(f)


def run_cli(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


# ---------------------------------------------------------------------------
# validate

def test_validate_clean_program(capsys):
    code, out = run_cli(capsys, "validate", "-p", CHAIN)
    assert code == 0
    assert json.loads(out) == {"diagnostics": []}


def test_validate_reports_diagnostics(capsys, tmp_path):
    bad = tmp_path / "bad.dcs"
    bad.write_text("a ~ bernoulli(0.5) <- \\+ b(X) ~= t.\nb(c) ~ val(t).\n")
    code, out = run_cli(capsys, "validate", "-p", str(bad))
    assert code == 1
    (d,) = json.loads(out)["diagnostics"]
    assert d["rule"] == "unsafe negation" and d["clause"] == 0


# ---------------------------------------------------------------------------
# query and exact

def test_query_json_schema(capsys):
    code, out = run_cli(capsys, "query", "-p", CHAIN, "-q", "e ~= 1",
                        "--algorithm", "cslw", "--samples", "4000",
                        "--seed", "3")
    assert code == 0
    d = json.loads(out)
    assert set(d) == {"estimate", "std_error", "samples", "algorithm",
                      "seed", "elapsed_ms"}
    assert d["algorithm"] == "cslw" and d["samples"] == 4000
    assert d["estimate"] == pytest.approx(0.74154, abs=0.03)


def test_query_with_evidence_file(capsys, tree_evidence):
    code, out = run_cli(capsys, "query", "-p", TREE, "-q", "e ~= 0",
                        "-e", tree_evidence, "--samples", "6000")
    assert code == 0
    assert json.loads(out)["estimate"] == pytest.approx(0.24746, abs=0.03)


def test_query_is_seed_reproducible(capsys):
    args = ("query", "-p", CHAIN, "-q", "e ~= 1", "--samples", "2000",
            "--seed", "11")
    _, out1 = run_cli(capsys, *args)
    _, out2 = run_cli(capsys, *args)
    assert json.loads(out1)["estimate"] == json.loads(out2)["estimate"]


def test_exact_matches_enumeration(capsys, tree_evidence):
    code, out = run_cli(capsys, "exact", "-p", TREE, "-q", "e ~= 0",
                        "-e", tree_evidence)
    assert code == 0
    d = json.loads(out)
    assert d["algorithm"] == "exact" and d["samples"] is None
    assert d["estimate"] == pytest.approx(0.2474634964987307, abs=1e-12)


# ---------------------------------------------------------------------------
# ground

def test_ground_prints_ground_clauses(capsys, tmp_path):
    world = tmp_path / "world.dcs"
    world.write_text("a ~= 1.\nb ~= 0.\nc ~= 1.\nd ~= 0.\ne ~= 1.\n")
    code, out = run_cli(capsys, "ground", "-p", CHAIN, "-e", str(world))
    assert code == 0
    lines = [l for l in out.splitlines() if l]
    assert len(lines) == 10
    assert all(l.endswith(".") for l in lines)


# ---------------------------------------------------------------------------
# bif2dcs

BIF = """
network tiny {
}
variable A {
  type discrete [ 2 ] { t, f };
}
variable B {
  type discrete [ 2 ] { t, f };
}
probability ( A ) {
  table 0.3, 0.7;
}
probability ( B | A ) {
  (t) 0.9, 0.1;
  (f) 0.9, 0.1;
}
"""


def test_bif2dcs_modes(capsys, tmp_path):
    f = tmp_path / "tiny.bif"
    f.write_text(BIF)
    code, tab = run_cli(capsys, "bif2dcs", "-p", str(f))
    assert code == 0
    assert tab.count("v_B ~") == 2
    code, tree = run_cli(capsys, "bif2dcs", "-p", str(f), "--mode", "tree")
    assert code == 0
    # B ignores A, so the tree form needs a single bodiless clause
    assert tree.count("v_B ~") == 1 and "v_B ~ discrete" in tree


# ---------------------------------------------------------------------------
# bench

def test_bench_scaling_csv(capsys):
    code, out = run_cli(capsys, "bench", "--study", "scaling", "--reps", "2",
                        "--domains", "1,2", "--samples", "200")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "algorithm,domain_size,repetition,estimate," \
                       "abs_error_vs_oracle,elapsed_ms"
    # one row per (domain, repetition)
    assert len(lines) == 1 + 2 * 2


# ---------------------------------------------------------------------------
# error handling

def test_parse_error_becomes_json(capsys, tmp_path):
    f = tmp_path / "broken.dcs"
    f.write_text("a ~ bernoulli(0.3)")
    code, out = run_cli(capsys, "query", "-p", str(f), "-q", "a ~= t")
    assert code == 1
    assert "error" in json.loads(out)


def test_missing_file_becomes_json(capsys):
    code, out = run_cli(capsys, "query", "-p", "/nonexistent.dcs",
                        "-q", "a ~= t")
    assert code == 1
    assert "error" in json.loads(out)


def test_invalid_samples_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["query", "-p", CHAIN, "-q", "a ~= t", "--samples", "0"])
    assert e.value.code == 2
