"""Backward errors of approximate eigenpairs for nonlinear eigenvalue
problems in split form, with structure-preserving variants.

Submodules are loaded lazily so the CLI can configure threading before any
BLAS-backed import happens.
"""

__version__ = "0.1.0"

_EXPORTS = {
    "SplitNEP": "core",
    "EigenpairSet": "core",
    "InvariantPair": "core",
    "LowRankMatrix": "core",
    "ScalarFunction": "core",
    "residual_bundle": "core",
    "invariant_residual": "core",
    "backward_error_exact": "unstructured",
    "bounds_with_eigenvectors": "unstructured",
    "bounds_eigenvalues_only": "unstructured",
    "PerturbationSet": "unstructured",
    "BoundsReport": "unstructured",
    "StructureSpec": "structures",
    "SubspaceBasis": "structures",
    "canonical_basis": "structures",
    "structured_backward_error": "structured",
    "structured_backward_error_invariant": "structured",
    "symmetric_backward_error": "symmetric",
    "symmetric_bound": "symmetric",
    "penalty_continuation": "penalty",
    "newton_eigenpair": "newton",
    "collect_pairs": "newton",
    "build_beam": "gallery",
    "build_random_split": "gallery",
    "build_quadratic_lowrank": "gallery",
    "perturb_ensemble": "gallery",
    "run_benchmark": "bench",
    "load_problem": "config_io",
}


def __getattr__(name):
    if name in _EXPORTS:
        import importlib

        mod = importlib.import_module(f".{_EXPORTS[name]}", __name__)
        return getattr(mod, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_EXPORTS))
