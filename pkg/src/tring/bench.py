"""Benchmark studies: oscillatory functions, dimension shifts, synthetic ranks.

Three study runners mirror the experiment families the package is
validated against:

* ``run_table3`` fits seeded random-ring data (optionally noisy) with
  every algorithm at a prescribed error,
* ``run_function_study`` tensorizes an oscillatory function over a
  sampling grid and fits it with every algorithm,
* ``run_shift_study`` refits circularly shifted versions of the same
  function tensor, rotating the fixed-rank fitter's bond sizes in step.

Each run produces an ExperimentReport row; ``write_ndjson`` serializes
rows one JSON object per line with a fixed key set (algorithm, eps,
r_avg, r_max, n_params, wall_time_s, seed), so byte-identical reruns
are expected from equal seeds, wall_time_s aside.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .decompose import FitOptions, FitReport, tr_als, tr_alsar, tr_bals, tr_svd, tt_svd
from .dense import DenseTensor, circular_shift_dims, validate_shape
from .formats import _atomic_write
from .ring import TRTensor

__all__ = [
    "ALL_ALGORITHMS",
    "DEFAULT_DOMAINS",
    "FunctionSpec",
    "ExperimentReport",
    "default_function_spec",
    "gen_function_data",
    "add_noise",
    "gen_tr_tensor",
    "run_table3",
    "run_function_study",
    "run_shift_study",
    "write_ndjson",
    "write_study_config",
]

ALL_ALGORITHMS = ("tt_svd", "tr_svd", "tr_als", "tr_alsar", "tr_bals")

DEFAULT_DOMAINS = {
    "f1": (0.0, 1.0),
    "f2": (1.0, 100.0),
    "f3": (0.0, 4.0 * math.pi),
}

_FUNCTIONS = {
    "f1": lambda x: (x + 1.0) * np.sin(100.0 * (x + 1.0) ** 2),
    "f2": lambda x: x ** (-0.25) * np.sin(2.0 / 3.0 * x**1.5),
    "f3": lambda x: np.sin(x / 4.0) * np.cos(x**2),
}

# sweep budgets for the functional fits; the fixed-rank fitter usually
# stops on its relative-change rule well before the cap
FUNCTION_ALS_SWEEPS = 12
FUNCTION_ALSAR_SWEEPS = 60


@dataclass(frozen=True)
class FunctionSpec:
    """Which function to sample, where, and how to fold the samples."""

    kind: str
    domain: tuple
    n_points: int
    dims: tuple

    def __post_init__(self):
        if self.kind not in _FUNCTIONS:
            raise ValueError(f"kind must be one of {sorted(_FUNCTIONS)}, got {self.kind!r}")
        a, b = (float(v) for v in self.domain)
        if not a < b:
            raise ValueError(f"domain must satisfy a < b, got ({a}, {b})")
        object.__setattr__(self, "domain", (a, b))
        dims = validate_shape(self.dims)
        object.__setattr__(self, "dims", dims)
        n = int(self.n_points)
        if n != math.prod(dims):
            raise ValueError(
                f"n_points {n} does not match the {math.prod(dims)} cells of {dims}"
            )
        if n < 2:
            raise ValueError("need at least two sample points")
        object.__setattr__(self, "n_points", n)


def default_function_spec(kind: str, dims=(4,) * 10, domain=None) -> FunctionSpec:
    """Spec for a kind over its default domain, folded to ``dims``."""
    if domain is None:
        if kind not in DEFAULT_DOMAINS:
            raise ValueError(f"kind must be one of {sorted(DEFAULT_DOMAINS)}, got {kind!r}")
        domain = DEFAULT_DOMAINS[kind]
    dims = tuple(int(n) for n in dims)
    return FunctionSpec(kind=kind, domain=domain, n_points=math.prod(dims), dims=dims)


def gen_function_data(spec: FunctionSpec, fn=None) -> DenseTensor:
    """Sample the function on a uniform grid and fold first-index-fastest.

    ``fn`` substitutes the integrand (same sampling grid); the default is
    the function named by ``spec.kind``.  The grid is
    x_j = a + (j-1)(b-a)/(N-1) for j = 1..N.
    """
    a, b = spec.domain
    if spec.kind == "f2" and a <= 0.0:
        raise ValueError(f"f2 needs a positive domain, got a = {a}")
    n = spec.n_points
    x = a + np.arange(n, dtype=np.float64) * (b - a) / (n - 1)
    values = (fn or _FUNCTIONS[spec.kind])(x)
    return DenseTensor(spec.dims, values)


def add_noise(t: DenseTensor, snr_db: float, seed: int) -> DenseTensor:
    """Add seeded white noise at a prescribed signal-to-noise ratio in dB."""
    norm = float(np.linalg.norm(t.data))
    if norm == 0.0:
        raise ValueError("cannot scale noise against a zero tensor")
    sigma = math.sqrt(norm**2 / (t.size * 10.0 ** (float(snr_db) / 10.0)))
    rng = np.random.default_rng(seed)
    return DenseTensor(t.shape, t.data + rng.normal(0.0, sigma, t.size))


def gen_tr_tensor(dims, ranks, seed: int) -> tuple[TRTensor, DenseTensor]:
    """Seeded random ring plus its dense form."""
    dims = validate_shape(dims)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(dims):
        raise ValueError(f"got {len(ranks)} bond sizes for {len(dims)} modes")
    rng = np.random.default_rng(seed)
    d = len(dims)
    cores = [
        rng.standard_normal((ranks[k], dims[k], ranks[(k + 1) % d])) for k in range(d)
    ]
    tr = TRTensor(cores, copy=False)
    return tr, tr.to_dense()


@dataclass(frozen=True)
class ExperimentReport:
    """One fitted run, reduced to the columns the study tables need."""

    algorithm: str
    eps: float
    r_avg: float
    r_max: int
    n_params: int
    wall_time_s: float
    seed: int

    @classmethod
    def from_fit(cls, algorithm: str, fit: FitReport, seed: int) -> "ExperimentReport":
        return cls(
            algorithm=algorithm,
            eps=float(fit.eps),
            r_avg=float(np.mean(fit.ranks)),
            r_max=int(max(fit.ranks)),
            n_params=int(fit.n_params),
            wall_time_s=float(fit.wall_time_s),
            seed=int(seed),
        )

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "eps": self.eps,
            "r_avg": self.r_avg,
            "r_max": self.r_max,
            "n_params": self.n_params,
            "wall_time_s": self.wall_time_s,
            "seed": self.seed,
        }


def _check_algorithms(algorithms) -> tuple:
    picked = tuple(a for a in ALL_ALGORITHMS if a in set(algorithms))
    unknown = set(algorithms) - set(ALL_ALGORITHMS)
    if unknown:
        raise ValueError(f"unknown algorithms {sorted(unknown)}; valid: {ALL_ALGORITHMS}")
    if not picked:
        raise ValueError("algorithm set is empty")
    return picked


def _run_one(name, t, eps_p, ranks, seed, max_sweeps=None):
    opts = FitOptions(seed=seed)
    if max_sweeps is not None:
        opts = FitOptions(seed=seed, max_sweeps=max_sweeps)
    if name == "tt_svd":
        return tt_svd(t, eps_p)
    if name == "tr_svd":
        return tr_svd(t, eps_p)
    if name == "tr_als":
        return tr_als(t, ranks, opts)
    if name == "tr_alsar":
        return tr_alsar(t, eps_p, opts)
    if name == "tr_bals":
        return tr_bals(t, eps_p, opts)
    raise ValueError(f"unknown algorithm {name!r}")


def run_table3(
    r_true: int,
    noise_snr_db: float | None = None,
    algorithms=ALL_ALGORITHMS,
    seed: int = 0,
    dims=(4,) * 10,
    eps_p: float | None = None,
    on_report=None,
) -> list[ExperimentReport]:
    """Fit seeded rank-``r_true`` ring data with each algorithm.

    The prescribed error defaults to 1e-3, or 1e-2 when noise is added;
    the fixed-rank fitter gets the true bond sizes.  Noise uses seed+1
    so the data and the perturbation stay independently reproducible.
    """
    picked = _check_algorithms(algorithms)
    ranks = (int(r_true),) * len(dims)
    _, t = gen_tr_tensor(dims, ranks, seed)
    if noise_snr_db is not None:
        t = add_noise(t, noise_snr_db, seed + 1)
    if eps_p is None:
        eps_p = 1e-3 if noise_snr_db is None else 1e-2
    reports = []
    for name in picked:
        _, fit = _run_one(name, t, eps_p, ranks, seed)
        report = ExperimentReport.from_fit(name, fit, seed)
        reports.append(report)
        if on_report is not None:
            on_report(report)
    return reports


def run_function_study(
    spec: FunctionSpec,
    eps_p: float = 1e-3,
    algorithms=ALL_ALGORITHMS,
    seed: int = 0,
    fn=None,
    on_report=None,
) -> list[ExperimentReport]:
    """Fit one sampled function with each algorithm.

    The fixed-rank fitter reuses the truncation fitter's bond sizes, so
    both see the same capacity.
    """
    picked = _check_algorithms(algorithms)
    t = gen_function_data(spec, fn)
    svd_ranks = None
    reports = []
    for name in picked:
        ranks = None
        max_sweeps = None
        if name == "tr_als":
            if svd_ranks is None:
                _, svd_fit = tr_svd(t, eps_p)
                svd_ranks = svd_fit.ranks
            ranks = svd_ranks
            max_sweeps = FUNCTION_ALS_SWEEPS
        elif name == "tr_alsar":
            max_sweeps = FUNCTION_ALSAR_SWEEPS
        _, fit = _run_one(name, t, eps_p, ranks, seed, max_sweeps)
        if name == "tr_svd":
            svd_ranks = fit.ranks
        report = ExperimentReport.from_fit(name, fit, seed)
        reports.append(report)
        if on_report is not None:
            on_report(report)
    return reports


def run_shift_study(
    spec: FunctionSpec,
    shifts=None,
    algorithms=("tt_svd", "tr_als"),
    eps_p: float = 1e-3,
    seed: int = 0,
    on_report=None,
) -> list[list[ExperimentReport]]:
    """Refit every circular mode shift of one function tensor.

    The fixed-rank fitter's bond sizes are the unshifted truncation
    fit's, rotated with the modes; its parameter count is therefore
    shift-invariant by construction, which is the point of the study.
    """
    picked = _check_algorithms(algorithms)
    t = gen_function_data(spec)
    d = len(spec.dims)
    if shifts is None:
        shifts = tuple(range(1, d))
    shifts = tuple(int(k) for k in shifts)
    if any(not 1 <= k <= d - 1 for k in shifts):
        raise ValueError(f"shifts must lie in 1..{d - 1}, got {shifts}")
    base_ranks = None
    if "tr_als" in picked:
        _, svd_fit = tr_svd(t, eps_p)
        base_ranks = svd_fit.ranks
    rows = []
    for k in shifts:
        shifted = circular_shift_dims(t, k)
        row = []
        for name in picked:
            ranks = None
            max_sweeps = None
            if name == "tr_als":
                ranks = base_ranks[k:] + base_ranks[:k]
                max_sweeps = FUNCTION_ALS_SWEEPS
            _, fit = _run_one(name, shifted, eps_p, ranks, seed, max_sweeps)
            report = ExperimentReport.from_fit(name, fit, seed)
            row.append(report)
            if on_report is not None:
                on_report(report)
        rows.append(row)
    return rows


def write_ndjson(path, reports) -> None:
    """One JSON object per line, fixed key order, atomic write."""
    lines = [json.dumps(r.to_dict()) for r in reports]
    payload = ("\n".join(lines) + "\n") if lines else ""
    _atomic_write(path, payload.encode("utf-8"))


def write_study_config(path, config: dict) -> None:
    """Pretty-printed study configuration, atomic write."""
    _atomic_write(path, (json.dumps(config, indent=2) + "\n").encode("utf-8"))
