"""Tensor ring decomposition toolkit.

A d-dimensional tensor is represented as a circular chain of order-3
cores; the entry at a multi-index is the trace of the product of the
corresponding core slices.  The package provides fitting algorithms
(truncation-based and alternating least squares, with and without rank
adaptation), arithmetic directly in the ring format, conversions from
CP / Tucker / tensor-train models, binary file formats, benchmark
studies, and a command line interface.

Submodule imports are lazy so that the CLI can pin BLAS thread counts
before NumPy is loaded.
"""

__version__ = "0.1.0"

_EXPORTS = {
    "DenseTensor": "dense",
    "tensorize": "dense",
    "linearize": "dense",
    "permute": "dense",
    "circular_shift_dims": "dense",
    "k_unfolding": "dense",
    "mode_k_unfolding": "dense",
    "fold": "dense",
    "relative_error": "dense",
    "truncated_svd": "linalg",
    "least_squares_rhs": "linalg",
    "balanced_factor_pair": "linalg",
    "TRTensor": "ring",
    "FitOptions": "decompose",
    "FitReport": "decompose",
    "tr_svd": "decompose",
    "tt_svd": "decompose",
    "tr_als": "decompose",
    "tr_alsar": "decompose",
    "tr_bals": "decompose",
    "add": "algebra",
    "hadamard": "algebra",
    "inner_product": "algebra",
    "fro_norm": "algebra",
    "multilinear_vec_product": "algebra",
    "CPRepr": "convert",
    "TuckerRepr": "convert",
    "TTRepr": "convert",
    "cp_to_tr": "convert",
    "tucker_to_tr": "convert",
    "tucker_from_dense": "convert",
    "tt_to_tr": "convert",
    "tr_to_tt_sum": "convert",
    "write_dense": "formats",
    "read_dense": "formats",
    "write_ring": "formats",
    "read_ring": "formats",
    "load_model_descriptor": "formats",
    "FunctionSpec": "bench",
    "ExperimentReport": "bench",
    "default_function_spec": "bench",
    "gen_function_data": "bench",
    "add_noise": "bench",
    "gen_tr_tensor": "bench",
    "run_table3": "bench",
    "run_function_study": "bench",
    "run_shift_study": "bench",
    "write_ndjson": "bench",
    "CapacityError": "errors",
    "FormatError": "errors",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    try:
        modname = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    import importlib

    module = importlib.import_module(f".{modname}", __name__)
    value = getattr(module, name)
    globals()[name] = value
    return value


def __dir__():
    return __all__
