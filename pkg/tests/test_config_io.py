import json

import numpy as np
import pytest
import scipy.sparse as sp

from nepbe.config_io import (
    ConfigError,
    load_problem,
    read_lambdas,
    read_matrix,
    result_payload,
    write_lambdas,
    write_matrix,
)
from nepbe.core import coeff_dense
from nepbe.gallery import build_beam


def write_config(tmp_path, cfg, name="problem.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=1))
    return path


BEAM_CONFIG = {
    "dimension": 40,
    "terms": [
        {"coefficient": {"builtin": "identity"},
         "function": {"name": "neg_lambda"},
         "structure": {"kind": "scaled-identity"}},
        {"coefficient": {"builtin": "beam_a0"},
         "function": {"name": "one"}},
        {"coefficient": {"builtin": "beam_a1"},
         "function": {"name": "exp_neg"}},
    ],
    "eigenpairs": {"solve": {"p": 2, "seed": 1, "starts": 12,
                             "start_interval": [-4.0, 0.3]}},
}


def test_builtin_beam_matches_gallery(tmp_path):
    path = write_config(tmp_path, BEAM_CONFIG)
    loaded = load_problem(path)
    ref = build_beam(40)
    for A, B in zip(loaded.nep.coeffs, ref.nep.coeffs):
        assert np.allclose(coeff_dense(A), coeff_dense(B))
    lam = 0.37
    assert np.allclose(coeff_dense(loaded.nep.evaluate(lam)),
                       coeff_dense(ref.nep.evaluate(lam)))


def test_solve_request_resolves(tmp_path):
    path = write_config(tmp_path, BEAM_CONFIG)
    loaded = load_problem(path)
    pairs = loaded.resolve_pairs()
    assert pairs.p == 2


def test_missing_matrix_file_names_term(tmp_path):
    cfg = {
        "dimension": 4,
        "terms": [{"coefficient": {"matrix_market": "nope.mtx"},
                   "function": {"name": "one"}}],
    }
    path = write_config(tmp_path, cfg)
    with pytest.raises(ConfigError, match="term 0.*nope.mtx"):
        load_problem(path)


def test_parse_error_carries_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dimension": 4,\n  "terms": [}')
    with pytest.raises(ConfigError, match="line 2"):
        load_problem(path)


def test_dimension_mismatch_named(tmp_path):
    M = np.eye(3)
    write_matrix(tmp_path / "m.mtx", M)
    cfg = {
        "dimension": 4,
        "terms": [{"coefficient": {"matrix_market": "m.mtx"},
                   "function": {"name": "one"}}],
    }
    path = write_config(tmp_path, cfg)
    with pytest.raises(ConfigError, match="term 0"):
        load_problem(path)


def test_matrix_market_roundtrip_complex(tmp_path, rng):
    V = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    p = tmp_path / "V.mtx"
    write_matrix(p, V)
    back = np.asarray(read_matrix(p))
    assert np.array_equal(back, V)  # 17 significant digits round-trip binary64


def test_matrix_market_roundtrip_sparse(tmp_path):
    A = sp.random(8, 8, density=0.3, random_state=1, format="coo")
    p = tmp_path / "A.mtx"
    write_matrix(p, A)
    back = read_matrix(p)
    assert np.array_equal(back.toarray(), A.toarray())


def test_lambdas_roundtrip(tmp_path):
    lams = np.array([0.5 + 0.25j, -1.0, 3.5j])
    p = tmp_path / "lams.json"
    write_lambdas(p, lams)
    assert np.array_equal(read_lambdas(p), lams)


def test_eigenpair_files_load(tmp_path, rng):
    n = 10
    lams = np.array([0.1 + 0.2j, -0.3])
    V = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    write_lambdas(tmp_path / "lams.json", lams)
    write_matrix(tmp_path / "V.mtx", V)
    cfg = {
        "dimension": n,
        "terms": [{"coefficient": {"builtin": "random", "params": {"seed": 2}},
                   "function": {"name": "one"}},
                  {"coefficient": {"builtin": "identity"},
                   "function": {"name": "lambda"}}],
        "eigenpairs": {"lambdas_file": "lams.json", "vectors_market": "V.mtx"},
    }
    path = write_config(tmp_path, cfg)
    loaded = load_problem(path)
    assert loaded.pairs is not None
    assert np.array_equal(loaded.pairs.lambdas, lams)
    assert np.allclose(np.linalg.norm(loaded.pairs.V, axis=0), 1.0)


def test_polynomial_and_scaled_exp_functions(tmp_path):
    cfg = {
        "dimension": 3,
        "terms": [
            {"coefficient": {"builtin": "identity"},
             "function": {"name": "polynomial", "coefficients": [1.0, 0.0, 2.0]}},
            {"coefficient": {"builtin": "identity"},
             "function": {"name": "scaled_exp", "rate": -2.0}},
        ],
    }
    path = write_config(tmp_path, cfg)
    nep = load_problem(path).nep
    lam = 0.7
    assert np.isclose(nep.funcs[0](lam), 1.0 + 2.0 * lam**2)
    assert np.isclose(nep.funcs[0].df(lam), 4.0 * lam)
    assert np.isclose(nep.funcs[1](lam), np.exp(-2.0 * lam))
    assert np.isclose(nep.funcs[1].df(lam), -2.0 * np.exp(-2.0 * lam))


def test_weights_applied(tmp_path):
    cfg = {
        "dimension": 3,
        "terms": [{"coefficient": {"builtin": "identity"}, "function": {"name": "one"}},
                  {"coefficient": {"builtin": "identity"}, "function": {"name": "lambda"}}],
        "weights": [3.0, 1.0],
    }
    nep = load_problem(write_config(tmp_path, cfg)).nep
    assert np.allclose(coeff_dense(nep.coeffs[0]), 3.0 * np.eye(3))


def test_result_payload_complex_encoding():
    from nepbe.core import ONE, SplitNEP

    nep = SplitNEP([np.eye(2)], [ONE])
    payload = result_payload(nep, 1, eta=0.5, residual_norm=1e-3,
                             bounds={"b": np.inf},
                             extra={"lambdas": np.array([1 + 2j])})
    assert payload["problem"] == {"n": 2, "k": 1, "p": 1}
    assert payload["lambdas"] == [[1.0, 2.0]]
    assert payload["bounds"]["b"] == "inf"
