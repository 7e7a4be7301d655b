"""Problem configuration files, Matrix Market I/O, and JSON result emission.

A problem config is a single JSON document:

    {
      "dimension": 1000,
      "terms": [
        {"coefficient": {"matrix_market": "A0.mtx"},
         "function": {"name": "exp_neg"},
         "structure": {"kind": "sparsity", "pattern": [[0, 0], [1, 2]]}},
        {"coefficient": {"builtin": "identity"},
         "function": {"name": "polynomial", "coefficients": [0.0, -1.0]},
         "structure": {"kind": "scaled-identity"}}
      ],
      "weights": [1.0, 1.0],
      "eigenpairs": {"lambdas_file": "lams.json", "vectors_market": "V.mtx"}
    }

The eigenpairs entry may instead request a Newton solve:
    "eigenpairs": {"solve": {"p": 3, "seed": 0, "starts": 20}}

Complex scalars are serialized as [re, im] pairs everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .core import EigenpairSet, LowRankMatrix, ScalarFunction, SplitNEP
from .structures import StructureSpec, SubspaceBasis


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scalar function registry
# ---------------------------------------------------------------------------

def _named_function(spec: dict) -> ScalarFunction:
    name = spec.get("name")
    if name == "one":
        return ScalarFunction(lambda lam: 1.0 + 0.0 * lam, lambda lam: 0.0 * lam, "one")
    if name == "lambda":
        return ScalarFunction(lambda lam: lam, lambda lam: 1.0 + 0.0 * lam, "lambda")
    if name == "neg_lambda":
        return ScalarFunction(lambda lam: -lam, lambda lam: -1.0 + 0.0 * lam, "neg_lambda")
    if name == "lambda2":
        return ScalarFunction(lambda lam: lam * lam, lambda lam: 2.0 * lam, "lambda2")
    if name == "exp_neg":
        return ScalarFunction(lambda lam: np.exp(-lam), lambda lam: -np.exp(-lam), "exp_neg")
    if name == "exp_neg2":
        return ScalarFunction(
            lambda lam: np.exp(-2.0 * lam), lambda lam: -2.0 * np.exp(-2.0 * lam), "exp_neg2"
        )
    if name == "scaled_exp":
        rate = spec.get("rate")
        if rate is None:
            raise ConfigError("scaled_exp needs a 'rate'")
        rate = float(rate)
        return ScalarFunction(
            lambda lam, r=rate: np.exp(r * lam),
            lambda lam, r=rate: r * np.exp(r * lam),
            f"scaled_exp({rate})",
        )
    if name == "polynomial":
        coeffs = spec.get("coefficients")
        if not coeffs:
            raise ConfigError("polynomial needs 'coefficients' (ascending powers)")
        c = np.asarray(coeffs, dtype=complex)
        if np.all(c.imag == 0):
            c = c.real
        dc = c[1:] * np.arange(1, len(c))

        def f(lam, c=c):
            return sum(ci * lam**i for i, ci in enumerate(c))

        def df(lam, dc=dc):
            return sum(ci * lam**i for i, ci in enumerate(dc)) if len(dc) else 0.0 * lam

        return ScalarFunction(f, df, f"poly{list(coeffs)}")
    raise ConfigError(f"unknown function name {name!r}")


# ---------------------------------------------------------------------------
# builtin coefficient generators
# ---------------------------------------------------------------------------

def _builtin_coefficient(name: str, n: int, params: dict):
    from . import gallery

    if name == "identity":
        return sp.identity(n, format="csr")
    if name == "beam_a0":
        return gallery.beam_a0(n)
    if name == "beam_a1":
        return gallery.beam_a1(n)
    if name == "tridiag":
        lo = float(params.get("lower", 1.0))
        di = float(params.get("diag", -2.0))
        up = float(params.get("upper", 1.0))
        return sp.diags(
            [np.full(n - 1, lo), np.full(n, di), np.full(n - 1, up)],
            offsets=[-1, 0, 1], format="csr",
        )
    if name == "random":
        rng = np.random.default_rng(int(params.get("seed", 0)))
        A = rng.standard_normal((n, n))
        if params.get("symmetric"):
            A = (A + A.T) / 2.0
        return A
    if name == "random_neg_gram":
        rng = np.random.default_rng(int(params.get("seed", 0)))
        r = int(params.get("rank", 2))
        U = rng.standard_normal((n, r))
        return LowRankMatrix(-U, U)
    raise ConfigError(f"unknown builtin coefficient generator {name!r}")


def _structure_spec(spec: dict | None, base_dir: Path) -> StructureSpec:
    if spec is None:
        return StructureSpec.unstructured()
    kind = spec.get("kind", "unstructured")
    if kind == "unstructured":
        return StructureSpec.unstructured()
    if kind == "symmetric":
        return StructureSpec.symmetric()
    if kind == "scaled-identity":
        return StructureSpec.scaled_identity()
    if kind == "sparsity":
        pattern = spec.get("pattern")
        if pattern is None:
            raise ConfigError("sparsity structure needs 'pattern': [[a, b], ...]")
        return StructureSpec.sparsity([(int(a), int(b)) for a, b in pattern])
    if kind == "fixed-rank":
        return StructureSpec.fixed_rank(int(spec["rank"]))
    if kind == "subspace":
        paths = spec.get("matrix_market")
        if not paths:
            raise ConfigError("subspace structure needs 'matrix_market': [paths]")
        mats = [read_matrix(base_dir / p) for p in paths]
        mats = [m.toarray() if sp.issparse(m) else np.asarray(m) for m in mats]
        return StructureSpec.subspace(SubspaceBasis.from_dense_matrices(mats))
    raise ConfigError(f"unknown structure kind {kind!r}")


# ---------------------------------------------------------------------------
# matrix market helpers
# ---------------------------------------------------------------------------

def read_matrix(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"matrix file not found: {path}")
    return scipy.io.mmread(str(path))


def write_matrix(path, M, comment: str = ""):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), M, comment=comment, precision=17)
    return str(path)


def read_lambdas(path) -> np.ndarray:
    """Complex eigenvalue list from JSON: numbers or [re, im] pairs."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"eigenvalue file not found: {path}")
    with open(path) as fh:
        data = json.load(fh)
    return np.array([complex(v[0], v[1]) if isinstance(v, list) else complex(v) for v in data])


def write_lambdas(path, lambdas) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump([[float(np.real(l)), float(np.imag(l))] for l in np.atleast_1d(lambdas)], fh)
    return str(path)


# ---------------------------------------------------------------------------
# problem loading
# ---------------------------------------------------------------------------

@dataclass
class LoadedProblem:
    nep: SplitNEP
    pairs: EigenpairSet | None
    solve_request: dict | None

    def resolve_pairs(self) -> EigenpairSet:
        """Pairs from the file, or via the requested Newton solve."""
        if self.pairs is not None:
            return self.pairs
        from .newton import NewtonOptions, collect_pairs

        req = dict(self.solve_request or {})
        p = int(req.pop("p", 1))
        seed = int(req.pop("seed", 0))
        starts = req.pop("starts", None)
        opt_fields = {}
        for key in ("tol", "max_iter", "start_radius", "start_center", "dedup_tol"):
            if key in req:
                opt_fields[key] = req.pop(key)
        if "start_interval" in req:
            opt_fields["start_interval"] = tuple(req.pop("start_interval"))
        pairs, _ = collect_pairs(self.nep, p=p, starts=starts, seed=seed,
                                 opts=NewtonOptions(**opt_fields))
        return pairs


def load_problem(config_path) -> LoadedProblem:
    """Parse a problem config; errors carry the offending path/term index."""
    config_path = Path(config_path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_path}")
    text = config_path.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{config_path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    base = config_path.parent

    try:
        n = int(cfg["dimension"])
        terms = cfg["terms"]
    except KeyError as exc:
        raise ConfigError(f"missing required config key {exc}") from exc
    if not terms:
        raise ConfigError("at least one term is required")

    coeffs, funcs, specs = [], [], []
    for j, term in enumerate(terms):
        src = term.get("coefficient", {})
        if "matrix_market" in src:
            mpath = base / src["matrix_market"]
            try:
                M = read_matrix(mpath)
            except ConfigError as exc:
                raise ConfigError(f"term {j}: {exc}") from exc
            if sp.issparse(M):
                M = M.tocsr()
            else:
                M = np.asarray(M)
        elif "builtin" in src:
            M = _builtin_coefficient(src["builtin"], n, src.get("params", {}))
        else:
            raise ConfigError(f"term {j}: coefficient needs 'matrix_market' or 'builtin'")
        if M.shape != (n, n):
            raise ConfigError(f"term {j}: coefficient is {M.shape}, expected ({n}, {n})")
        coeffs.append(M)
        funcs.append(_named_function(term.get("function", {})))
        specs.append(_structure_spec(term.get("structure"), base))

    weights = cfg.get("weights")
    nep = SplitNEP(coeffs, funcs, weights=weights, specs=specs)

    pairs = None
    solve_request = None
    eig = cfg.get("eigenpairs")
    if eig:
        if "solve" in eig:
            solve_request = dict(eig["solve"])
        else:
            lams = read_lambdas(base / eig["lambdas_file"])
            V = read_matrix(base / eig["vectors_market"])
            V = V.toarray() if sp.issparse(V) else np.asarray(V)
            if V.shape != (n, lams.size):
                raise ConfigError(
                    f"eigenvector matrix is {V.shape}, expected ({n}, {lams.size})"
                )
            pairs = EigenpairSet(lams, V, normalize=bool(eig.get("normalize", True)))
    return LoadedProblem(nep, pairs, solve_request)


# ---------------------------------------------------------------------------
# JSON result emission
# ---------------------------------------------------------------------------

def _jsonify(value):
    if isinstance(value, complex) or isinstance(value, np.complexfloating):
        return [float(np.real(value)), float(np.imag(value))]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and np.isinf(value):
        return "inf"
    if isinstance(value, np.ndarray):
        return [_jsonify(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, float):
        return value
    return value


def result_payload(nep: SplitNEP, p: int | None, eta=None, residual_norm=None,
                   bounds: dict | None = None, timings: dict | None = None,
                   extra: dict | None = None) -> dict:
    """The stable machine-output schema shared by all CLI subcommands."""
    payload = {
        "eta": _jsonify(eta),
        "residual_norm": _jsonify(residual_norm),
        "bounds": _jsonify(bounds or {}),
        "timings": _jsonify(timings or {}),
        "problem": {"n": nep.n, "k": nep.k, "p": p},
    }
    if extra:
        payload.update(_jsonify(extra))
    return payload


def dump_json(payload: dict, stream) -> None:
    json.dump(payload, stream, indent=2, sort_keys=True)
    stream.write("\n")
