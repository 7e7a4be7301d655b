import json

import numpy as np
import pytest

from nepbe.cli import main


BEAM_CONFIG = {
    "dimension": 30,
    "terms": [
        {"coefficient": {"builtin": "identity"},
         "function": {"name": "neg_lambda"},
         "structure": {"kind": "scaled-identity"}},
        {"coefficient": {"builtin": "beam_a0"},
         "function": {"name": "one"},
         "structure": {"kind": "sparsity",
                       "pattern": None}},  # filled in by fixture
        {"coefficient": {"builtin": "beam_a1"},
         "function": {"name": "exp_neg"},
         "structure": {"kind": "sparsity", "pattern": [[29, 29]]}},
    ],
    "eigenpairs": {"solve": {"p": 2, "seed": 1, "starts": 12,
                             "start_interval": [-4.0, 0.3]}},
}


@pytest.fixture
def beam_config(tmp_path):
    from nepbe.gallery import beam_a0

    cfg = json.loads(json.dumps(BEAM_CONFIG))
    A0 = beam_a0(30).tocoo()
    cfg["terms"][1]["structure"]["pattern"] = [[int(a), int(b)] for a, b in zip(A0.row, A0.col)]
    path = tmp_path / "beam.json"
    path.write_text(json.dumps(cfg))
    return path


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_exact_json_schema(beam_config, capsys):
    code, payload = run_json(capsys, ["exact", str(beam_config), "--json"])
    assert code == 0
    assert set(payload) >= {"eta", "residual_norm", "bounds", "timings", "problem"}
    assert payload["problem"] == {"n": 30, "k": 3, "p": 2}
    # Newton-converged pairs: backward error at solver-tolerance level
    assert payload["eta"] <= 1e-8


def test_exact_golden_output(beam_config, capsys, tmp_path):
    """Schema freeze: key layout of the machine output must stay stable."""
    code, payload = run_json(capsys, ["exact", str(beam_config), "--json"])
    golden_keys = {
        "bounds": {},
        "eta": None,
        "perturbation_term_norms": None,
        "perturbed_residual_norm": None,
        "problem": {"k": None, "n": None, "p": None},
        "residual_norm": None,
        "timings": {"exact_seconds": None},
    }

    def keys_of(d):
        if not isinstance(d, dict):
            return None
        return {k: keys_of(v) if isinstance(v, dict) else None for k, v in sorted(d.items())}

    assert keys_of(payload) == keys_of(golden_keys)


def test_bounds_matches_library(beam_config, capsys):
    code, payload = run_json(capsys, ["bounds", str(beam_config), "--json"])
    assert code == 0
    from nepbe.config_io import load_problem
    from nepbe.unstructured import bounds_with_eigenvectors

    loaded = load_problem(beam_config)
    rep = bounds_with_eigenvectors(loaded.nep, loaded.resolve_pairs())
    assert np.isclose(payload["eta"], rep.eta_exact, rtol=1e-12, atol=1e-300)
    assert np.isclose(payload["bounds"]["upper_krt"], rep.upper_krt, rtol=1e-12)


def test_eigvals_only(beam_config, capsys):
    code, payload = run_json(capsys, ["eigvals-only", str(beam_config), "--json"])
    assert code == 0
    assert payload["bounds"]["lower_sv"] <= payload["bounds"]["upper_sv"] + 1e-12


def test_structured_command(beam_config, capsys):
    code, payload = run_json(capsys, ["structured", str(beam_config), "--json"])
    assert code == 0
    assert payload["consistent"] is True
    assert payload["eta"] >= 0


def test_riemannian_command(beam_config, capsys):
    code, payload = run_json(
        capsys, ["riemannian", str(beam_config), "--json", "--rho", "0.1", "--eps", "1e-6"]
    )
    assert code == 0
    assert payload["converged"] is True
    assert payload["residual_norm"] <= 1e-6
    assert len(payload["stages"]) == 13  # mu = 1 ... 1e-12 for eps 1e-6


def test_riemannian_matches_structured(beam_config, capsys):
    code1, p1 = run_json(capsys, ["structured", str(beam_config), "--json"])
    code2, p2 = run_json(capsys, ["riemannian", str(beam_config), "--json"])
    # both tiny for exact pairs; agreement is meaningful on perturbed data,
    # covered by the acceptance suite; here: same order of magnitude
    assert p2["eta"] <= p1["eta"] + 1e-8


def test_riemannian_fixed_rank_config(tmp_path, capsys):
    # quadratic-gallery-shaped config with a fixed-rank structure: only the
    # riemannian command can honor it end to end
    n = 60
    cfg = {
        "dimension": n,
        "terms": [
            {"coefficient": {"builtin": "tridiag"},
             "function": {"name": "one"},
             "structure": {"kind": "sparsity",
                           "pattern": [[i, j] for i in range(n) for j in range(n)
                                       if abs(i - j) <= 1]}},
            {"coefficient": {"builtin": "random_neg_gram", "params": {"seed": 4, "rank": 2}},
             "function": {"name": "lambda"},
             "structure": {"kind": "fixed-rank", "rank": 2}},
            {"coefficient": {"builtin": "identity"},
             "function": {"name": "lambda2"},
             "structure": {"kind": "scaled-identity"}},
        ],
        "eigenpairs": {"solve": {"p": 2, "seed": 2, "starts": 14,
                                 "start_interval": [-2.2, 2.2]}},
    }
    path = tmp_path / "quad.json"
    path.write_text(json.dumps(cfg))
    code, payload = run_json(capsys, ["riemannian", str(path), "--json"])
    assert code == 0
    assert payload["converged"] is True
    # structured must refuse the nonlinear spec
    code2 = main(["structured", str(path), "--json"])
    assert code2 == 1


def test_solve_saves_files(beam_config, capsys, tmp_path):
    lam_file = tmp_path / "lams.json"
    vec_file = tmp_path / "V.mtx"
    code = main(["solve", str(beam_config), "--save-lambdas", str(lam_file),
                 "--save-vectors", str(vec_file), "--json"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["lambdas"]) == 2
    from nepbe.config_io import read_lambdas, read_matrix

    assert read_lambdas(lam_file).size == 2
    assert np.asarray(read_matrix(vec_file)).shape == (30, 2)


def test_solve_then_file_eigenpairs_roundtrip(beam_config, capsys, tmp_path):
    # solve once, persist the pairs, then feed them back through the
    # two-file eigenpair path; the backward error must match exactly
    lam_file = tmp_path / "lams.json"
    vec_file = tmp_path / "V.mtx"
    assert main(["solve", str(beam_config), "--save-lambdas", str(lam_file),
                 "--save-vectors", str(vec_file)]) == 0
    capsys.readouterr()
    code1, p1 = run_json(capsys, ["exact", str(beam_config), "--json"])

    # vectors are stored unit-norm already; normalize=false keeps the
    # file path bit-identical to the in-memory pairs
    cfg = json.loads(beam_config.read_text())
    cfg["eigenpairs"] = {"lambdas_file": str(lam_file), "vectors_market": str(vec_file),
                         "normalize": False}
    cfg_path = tmp_path / "beam_files.json"
    cfg_path.write_text(json.dumps(cfg))
    code2, p2 = run_json(capsys, ["exact", str(cfg_path), "--json"])
    assert code1 == code2 == 0
    assert p1["eta"] == p2["eta"]


def test_bench_creates_files(tmp_path, capsys):
    code = main(["bench", "sparse-structured", "--out", str(tmp_path / "results"),
                 "--count", "3", "--json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert (tmp_path / "results" / "sparse-structured" / "sparse_structured.dat").exists()


def test_suites_listed(capsys):
    code = main(["suites"])
    assert code == 0
    out = capsys.readouterr().out
    assert "beam-p3" in out and "riemannian-quadratic" in out


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["not-a-command"])
    assert exc.value.code == 2


def test_computational_failure_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code = main(["exact", str(path), "--json"])
    assert code == 1
    assert "error:" in capsys.readouterr().err
