"""Fitting a dense tensor with a tensor ring.

Two families:

* sequential SVD sweeps with prescribed relative error (``tr_svd`` and
  the ``tt_svd`` baseline, which is the same pipeline with the wrap
  bond pinned to 1), and
* alternating least squares (``tr_als`` at fixed bond sizes,
  ``tr_alsar`` growing one bond at a time, ``tr_bals`` updating
  adjacent core pairs and re-splitting them with a truncated SVD).

Each fit returns ``(TRTensor, FitReport)``.  The error tracked inside
the iterative loops is exact: after a core (or core pair) update, the
Frobenius mismatch of the corresponding unfolding equals the global
reconstruction error, because unfolding is an isometry; no dense
reconstruction is needed until the final report.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .dense import DenseTensor, circular_shift_dims, k_unfolding, mode_k_unfolding, relative_error
from .linalg import balanced_factor_pair, least_squares_rhs, truncated_svd
from .ring import (
    MAX_DENSE_ELEMENTS,
    TRTensor,
    _merge_cores,
    fold_mode_classical,
    mode_unfold_shifted,
)

__all__ = ["FitOptions", "FitReport", "tr_svd", "tt_svd", "tr_als", "tr_alsar", "tr_bals"]

# tr_alsar runs a growth round only after the per-sweep relative error
# improvement falls below this; in between, plain sweeps settle the fit
GROWTH_PLATEAU_TOL = 0.02

# consecutive growth rounds with no accepted increase before tr_alsar
# concludes the target cannot be reached and returns the best iterate
MAX_FRUITLESS_ROUNDS = 4


@dataclass
class FitOptions:
    """Knobs shared by the iterative fitters.

    ``accept_tol`` is the rank-growth acceptance threshold of
    ``tr_alsar`` (default 1e-2 / d), ``max_rank`` caps every bond in the
    rank-adaptive fitters (default: the largest split rank any boundary
    unfolding of the target shape can have).
    """

    max_sweeps: int = 50
    conv_tol: float = 1e-6
    accept_tol: float | None = None
    seed: int = 0
    max_rank: int | None = None


@dataclass
class FitReport:
    """What a fit achieved and what it cost."""

    eps: float
    ranks: tuple[int, ...]
    n_params: int
    sweeps: int
    wall_time_s: float
    converged: bool = True
    seed: int | None = None
    # per-step truncation residuals of the SVD-based fitters
    svd_residuals: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "ranks": list(self.ranks),
            "n_params": self.n_params,
            "sweeps": self.sweeps,
            "wall_time_s": self.wall_time_s,
            "converged": self.converged,
            "seed": self.seed,
        }


def default_max_rank(dims) -> int:
    """Largest achievable rank of any boundary unfolding of ``dims``."""
    d = len(dims)
    return max(
        min(math.prod(dims[:k]), math.prod(dims[k:])) for k in range(1, d)
    ) if d > 1 else 1


def achieved_eps(t: DenseTensor, tr: TRTensor) -> float:
    """Exact relative reconstruction error of ``tr`` against ``t``.

    Dense reconstruction when the element count allows it; otherwise the
    expansion ||t - x||^2 = ||t||^2 - 2<t, x> + ||x||^2 with both terms
    contracted in the ring format.
    """
    if t.size <= MAX_DENSE_ELEMENTS:
        return relative_error(t, tr.to_dense())
    norm_t = t.norm()
    if norm_t == 0.0:
        raise ValueError("reference tensor has zero norm")
    cross = _dense_ring_inner(t, tr)
    sq = norm_t**2 - 2.0 * cross + algebra.fro_norm(tr) ** 2
    return math.sqrt(max(sq, 0.0)) / norm_t


def _dense_ring_inner(t: DenseTensor, tr: TRTensor) -> float:
    """<t, tr> contracted one mode at a time."""
    if t.shape != tr.shape:
        raise ValueError(f"shape mismatch: {t.shape} vs {tr.shape}")
    # state after mode k: (r_1, r_{k+1}, n_{k+1}, ..., n_d)
    state = np.tensordot(tr.cores[0], t.as_array(), axes=([1], [0]))
    for core in tr.cores[1:]:
        state = np.tensordot(state, core, axes=([1, 2], [0, 1]))
        state = np.moveaxis(state, -1, 1)
    return float(np.trace(state))


def _validated(t: DenseTensor) -> float:
    if t.order < 2:
        raise ValueError("fitting needs a tensor with at least two modes")
    norm_t = t.norm()
    if norm_t == 0.0:
        raise ValueError("cannot fit a zero tensor with a relative error target")
    if not np.isfinite(t.data).all():
        raise FloatingPointError("tensor has non-finite entries")
    return norm_t


# ---------------------------------------------------------------------------
# sequential SVD fitters


def _svd_sweep(t: DenseTensor, deltas: list[float], first_split) -> tuple[TRTensor, list[float]]:
    """Shared pipeline: split off one core per step with truncated SVDs."""
    dims = t.shape
    d = len(dims)
    res = truncated_svd(k_unfolding(t, 1), deltas[0])
    r1, r2 = first_split(res.rank)
    residuals = [res.residual_fro]
    core1 = np.transpose(res.U[:, : r1 * r2].reshape((dims[0], r1, r2), order="F"), (1, 0, 2))
    sv = res.S[:, None] * res.V.T
    chain = np.transpose(sv.reshape((r1, r2, -1), order="F"), (1, 2, 0))
    cores = [core1]
    for k in range(1, d - 1):
        r_left = chain.shape[0]
        mat = chain.reshape((r_left * dims[k], -1), order="F")
        res = truncated_svd(mat, deltas[k])
        residuals.append(res.residual_fro)
        cores.append(res.U.reshape((r_left, dims[k], res.rank), order="F"))
        sv = res.S[:, None] * res.V.T
        chain = sv.reshape((res.rank, math.prod(dims[k + 1:]), r1), order="F")
    cores.append(chain)
    return TRTensor(cores, copy=False), residuals


def tr_svd(t: DenseTensor, eps_target: float) -> tuple[TRTensor, FitReport]:
    """One-pass fit with prescribed relative error ``eps_target``.

    The first unfolding is truncated at sqrt(2) eps ||t|| / sqrt(d) and
    its rank is split into the two bonds adjacent to mode 1 as the most
    balanced factor pair; later steps truncate at eps ||t|| / sqrt(d),
    which keeps the total error within ``eps_target`` up to rounding.
    Interior cores come out with orthonormal (bond, mode)-unfolding
    columns.
    """
    norm_t = _validated(t)
    eps_target = float(eps_target)
    if eps_target < 0.0:
        raise ValueError(f"eps_target must be non-negative, got {eps_target}")
    start = time.perf_counter()
    d = t.order
    deltas = [eps_target * norm_t / math.sqrt(d)] * (d - 1)
    deltas[0] *= math.sqrt(2.0)
    tr, residuals = _svd_sweep(t, deltas, balanced_factor_pair)
    report = FitReport(
        eps=achieved_eps(t, tr),
        ranks=tr.ranks,
        n_params=tr.num_params(),
        sweeps=1,
        wall_time_s=time.perf_counter() - start,
        svd_residuals=tuple(residuals),
    )
    return tr, report


def tt_svd(t: DenseTensor, eps_target: float) -> tuple[TRTensor, FitReport]:
    """Baseline with the wrap bond pinned to 1 (a tensor train).

    Same pipeline as ``tr_svd`` with every truncation at
    eps ||t|| / sqrt(d - 1) and the first split forced to (1, rank).
    """
    norm_t = _validated(t)
    eps_target = float(eps_target)
    if eps_target < 0.0:
        raise ValueError(f"eps_target must be non-negative, got {eps_target}")
    start = time.perf_counter()
    d = t.order
    deltas = [eps_target * norm_t / math.sqrt(d - 1)] * (d - 1)
    tr, residuals = _svd_sweep(t, deltas, lambda rank: (1, rank))
    report = FitReport(
        eps=achieved_eps(t, tr),
        ranks=tr.ranks,
        n_params=tr.num_params(),
        sweeps=1,
        wall_time_s=time.perf_counter() - start,
        svd_residuals=tuple(residuals),
    )
    return tr, report


# ---------------------------------------------------------------------------
# alternating least squares fitters


def _env_design(cores: list[np.ndarray], k: int) -> np.ndarray:
    """Design matrix for updating core k: the complementary subchain's
    shifted mode-2 unfolding, (prod of other mode sizes) x (r_k r_{k+1})."""
    d = len(cores)
    picked = [cores[(k + 1 + j) % d] for j in range(d - 1)]
    return mode_unfold_shifted(_merge_cores(picked))


def _normalize_right_slices(core: np.ndarray) -> np.ndarray:
    """Unit-normalize each right-bond slice of a core.

    This rescaling lives on the bond shared with the next core, so the
    next core's solve absorbs it exactly; normalizing the finer
    (left bond, right bond) column pairs instead would distort the
    model in a way later solves cannot undo.
    """
    norms = np.sqrt(np.einsum("anb,anb->b", core, core))
    safe = np.where(norms > 0.0, norms, 1.0)
    return core / safe


def _als_core_update(t_mode, design, r_left, r_right, normalize):
    """Solve for one core, returning it folded plus the exact global error."""
    sol = least_squares_rhs(t_mode, design)
    resid = float(np.linalg.norm(t_mode - sol @ design.T))
    core = fold_mode_classical(sol, r_left, r_right)
    if normalize:
        core = _normalize_right_slices(core)
    return core, resid


def tr_als(
    t: DenseTensor,
    ranks,
    options: FitOptions | None = None,
    initial_cores=None,
) -> tuple[TRTensor, FitReport]:
    """Alternating least squares at fixed bond sizes.

    Cores start from seeded standard normal draws (or ``initial_cores``)
    and are updated one at a time against the matching mode unfolding;
    every core except the last has its right-bond slices normalized so
    the last core carries the scale.  Stops when the sweep-end relative
    error changes
    by less than ``conv_tol`` relatively, hits the rounding floor, or
    after ``max_sweeps``.  Returns the best sweep seen.
    """
    norm_t = _validated(t)
    opts = options or FitOptions()
    d = t.order
    dims = t.shape
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != d:
        raise ValueError(f"got {len(ranks)} bond sizes for {d} modes")
    if any(r < 1 for r in ranks):
        raise ValueError(f"bond sizes must be >= 1, got {ranks}")
    start = time.perf_counter()
    rng = np.random.default_rng(opts.seed)
    if initial_cores is None:
        cores = [
            rng.standard_normal((ranks[k], dims[k], ranks[(k + 1) % d])) for k in range(d)
        ]
    else:
        cores = [np.array(c, dtype=np.float64) for c in initial_cores]
        expected = [(ranks[k], dims[k], ranks[(k + 1) % d]) for k in range(d)]
        if [c.shape for c in cores] != expected:
            raise ValueError("initial cores do not match the requested bond sizes")
    t_modes = [mode_k_unfolding(t, k + 1, "shifted") for k in range(d)]

    best_eps, best_cores = math.inf, None
    eps_prev = None
    eps = math.inf
    converged = False
    sweeps = 0
    for sweep in range(1, opts.max_sweeps + 1):
        sweeps = sweep
        for k in range(d):
            design = _env_design(cores, k)
            cores[k], resid = _als_core_update(
                t_modes[k], design, ranks[k], ranks[(k + 1) % d], normalize=k != d - 1
            )
            eps = resid / norm_t
        if eps < best_eps:
            best_eps, best_cores = eps, [c.copy() for c in cores]
        if eps <= 1e-13:
            converged = True
            break
        if eps_prev is not None and abs(eps_prev - eps) <= opts.conv_tol * eps_prev:
            converged = True
            break
        eps_prev = eps
    tr = TRTensor(best_cores, copy=False)
    report = FitReport(
        eps=achieved_eps(t, tr),
        ranks=tr.ranks,
        n_params=tr.num_params(),
        sweeps=sweeps,
        wall_time_s=time.perf_counter() - start,
        converged=converged,
        seed=opts.seed,
    )
    return tr, report


def tr_alsar(
    t: DenseTensor, eps_target: float, options: FitOptions | None = None
) -> tuple[TRTensor, FitReport]:
    """Alternating least squares with one-at-a-time rank growth.

    All bonds start at 1.  Plain sweeps refine the cores at fixed ranks;
    once the sweep-to-sweep error improvement stalls (relative change
    below GROWTH_PLATEAU_TOL), the next sweep becomes a growth round:
    after each core update the bond to its right is tentatively enlarged
    by one (the neighbor core is padded with small seeded noise, the
    core re-solved), and the growth sticks only when the error moves by
    more than ``accept_tol`` times the remaining gap to ``eps_target``,
    otherwise both cores and the bond are restored.  Alternating
    settling with growth keeps capacity from outrunning the fit, which
    is what makes the acceptance test informative.  After
    MAX_FRUITLESS_ROUNDS consecutive growth rounds with no acceptance
    (each retried with a coarser random probe) the loop ends and the
    best iterate is returned with ``converged=False``.
    """
    norm_t = _validated(t)
    opts = options or FitOptions()
    d = t.order
    dims = t.shape
    eps_target = float(eps_target)
    if eps_target < 0.0:
        raise ValueError(f"eps_target must be non-negative, got {eps_target}")
    accept_tol = opts.accept_tol if opts.accept_tol is not None else 1e-2 / d
    cap = opts.max_rank if opts.max_rank is not None else default_max_rank(dims)
    start = time.perf_counter()
    rng = np.random.default_rng(opts.seed)
    cores = [rng.standard_normal((1, n, 1)) for n in dims]
    t_modes = [mode_k_unfolding(t, k + 1, "shifted") for k in range(d)]

    best_eps, best_cores = math.inf, [c.copy() for c in cores]
    eps = math.inf
    converged = False
    sweeps = 0
    eps_hist: list[float] = []
    fruitless = 0
    for sweep in range(1, opts.max_sweeps + 1):
        sweeps = sweep
        # grow only once settling has stalled; the first sweeps after an
        # increase still shuffle energy between cores, and trial errors
        # measured then accept ranks the settled fit does not need
        grow = len(eps_hist) >= 2 and eps_hist[-2] - eps_hist[-1] <= GROWTH_PLATEAU_TOL * eps_hist[-2]
        accepted = 0
        # pads are random probes, so a fruitless round proves little; retry
        # with a tenfold coarser probe before concluding nothing is left
        pad_scale = 0.01 * 10.0**fruitless
        for k in range(d):
            knext = (k + 1) % d
            r_left = cores[k].shape[0]
            r_right = cores[k].shape[2]
            design = _env_design(cores, k)
            sol = least_squares_rhs(t_modes[k], design)
            eps_old = float(np.linalg.norm(t_modes[k] - sol @ design.T)) / norm_t
            eps = eps_old
            if grow and eps_old > eps_target and r_right < cap:
                neighbor = cores[knext]
                rms = math.sqrt(float(np.mean(neighbor**2)))
                pad = rng.normal(0.0, pad_scale * rms if rms > 0.0 else pad_scale, (1,) + neighbor.shape[1:])
                cores[knext] = np.concatenate([neighbor, pad], axis=0)
                trial_design = _env_design(cores, k)
                trial_sol = least_squares_rhs(t_modes[k], trial_design)
                # relax the neighbor too before judging: the pad is only an
                # initial guess, and the error reachable with the grown bond
                # is what the acceptance test is meant to see
                cores[k] = fold_mode_classical(trial_sol, r_left, r_right + 1)
                cores[knext], resid = _als_core_update(
                    t_modes[knext],
                    _env_design(cores, knext),
                    r_right + 1,
                    cores[(k + 2) % d].shape[0],
                    normalize=False,
                )
                eps_new = resid / norm_t
                if abs(eps_old - eps_new) > accept_tol * abs(eps_old - eps_target):
                    sol, r_right, eps = trial_sol, r_right + 1, eps_new
                    accepted += 1
                else:
                    cores[knext] = neighbor
            core = fold_mode_classical(sol, r_left, r_right)
            cores[k] = _normalize_right_slices(core) if k != d - 1 else core
        if eps < best_eps:
            best_eps, best_cores = eps, [c.copy() for c in cores]
        if eps <= eps_target:
            converged = True
            break
        if grow:
            fruitless = fruitless + 1 if accepted == 0 else 0
            if fruitless >= MAX_FRUITLESS_ROUNDS:
                # settled, repeated trials all rejected (or every bond
                # capped): no move is left
                break
        eps_hist.append(eps)
    tr = TRTensor(best_cores, copy=False)
    report = FitReport(
        eps=achieved_eps(t, tr),
        ranks=tr.ranks,
        n_params=tr.num_params(),
        sweeps=sweeps,
        wall_time_s=time.perf_counter() - start,
        converged=converged,
        seed=opts.seed,
    )
    return tr, report


def _block_unfolding(t: DenseTensor, k: int) -> np.ndarray:
    """(n_k n_{k+1}) x rest matrix with rows pairing modes k, k+1 (circular)."""
    d = t.order
    shifted = circular_shift_dims(t, k - 1)
    rows = shifted.shape[0] * shifted.shape[1]
    return shifted.data.reshape((rows, t.size // rows), order="F")


def _pair_env_design(cores: list[np.ndarray], k: int) -> np.ndarray:
    """Design matrix for the block update of cores (k, k+1), both 0-based."""
    d = len(cores)
    if d == 2:
        r = cores[k].shape[0]
        ident = np.eye(r).reshape((r, 1, r))
        return mode_unfold_shifted(ident)
    picked = [cores[(k + 2 + j) % d] for j in range(d - 2)]
    return mode_unfold_shifted(_merge_cores(picked))


def tr_bals(
    t: DenseTensor, eps_target: float, options: FitOptions | None = None
) -> tuple[TRTensor, FitReport]:
    """Block-wise alternating least squares with SVD rank adaptation.

    Each step solves jointly for an adjacent core pair (the wrap pair
    (d, 1) included), reshapes the merged solution so its rows pair
    (left bond, first mode) and its columns pair (second mode, right
    bond), and re-splits it with a truncated SVD whose threshold is
    max(current error, ``eps_target``) ||t|| / sqrt(d).  The split rank
    becomes the new shared bond: the orthonormal factor goes to the
    first core of the pair, the weighted factor to the second.
    """
    norm_t = _validated(t)
    opts = options or FitOptions()
    d = t.order
    dims = t.shape
    eps_target = float(eps_target)
    if eps_target < 0.0:
        raise ValueError(f"eps_target must be non-negative, got {eps_target}")
    cap = opts.max_rank if opts.max_rank is not None else default_max_rank(dims)
    start = time.perf_counter()
    rng = np.random.default_rng(opts.seed)
    cores = [rng.standard_normal((1, n, 1)) for n in dims]
    t_blocks = [_block_unfolding(t, k + 1) for k in range(d)]

    best_eps, best_cores = math.inf, [c.copy() for c in cores]
    eps = math.inf
    converged = False
    sweeps = 0
    prev_state = None
    # With two modes both pairs share the same two bonds and the capacity
    # depends only on their product, so the wrap bond stays at 1 and each
    # sweep updates the single interior pair.
    pair_starts = range(d) if d > 2 else (0,)
    for sweep in range(1, opts.max_sweeps + 1):
        sweeps = sweep
        for k in pair_starts:
            knext = (k + 1) % d
            r_left = cores[k].shape[0]
            r_right = cores[knext].shape[2]
            n_k, n_next = dims[k], dims[knext]
            design = _pair_env_design(cores, k)
            sol = least_squares_rhs(t_blocks[k], design)
            eps_ls = float(np.linalg.norm(t_blocks[k] - sol @ design.T)) / norm_t
            # threshold relative to the block's own mass: early on the block
            # carries only the captured part of the tensor, and a threshold
            # scaled by the full tensor norm would freeze every bond at 1
            delta = max(eps_ls, eps_target) * float(np.linalg.norm(sol)) / math.sqrt(d)
            # rows (bond, mode k), columns (mode k+1, bond)
            merged = np.transpose(
                sol.reshape((n_k, n_next, r_left, r_right), order="F"), (2, 0, 1, 3)
            ).reshape((r_left * n_k, n_next * r_right), order="F")
            res = truncated_svd(merged, delta, max_rank=cap)
            cores[k] = res.U.reshape((r_left, n_k, res.rank), order="F")
            sv = res.S[:, None] * res.V.T
            cores[knext] = sv.reshape((res.rank, n_next, r_right), order="F")
            trunc = np.transpose(
                (res.U @ sv).reshape((r_left, n_k, n_next, r_right), order="F"), (1, 2, 0, 3)
            ).reshape((n_k * n_next, r_left * r_right), order="F")
            eps = float(np.linalg.norm(t_blocks[k] - trunc @ design.T)) / norm_t
        if eps < best_eps:
            best_eps, best_cores = eps, [c.copy() for c in cores]
        if eps <= eps_target:
            converged = True
            break
        ranks = tuple(c.shape[0] for c in cores)
        if prev_state is not None:
            eps_prev, ranks_prev = prev_state
            if ranks == ranks_prev and abs(eps_prev - eps) <= opts.conv_tol * eps_prev:
                break
        prev_state = (eps, ranks)
    tr = TRTensor(best_cores, copy=False)
    report = FitReport(
        eps=achieved_eps(t, tr),
        ranks=tr.ranks,
        n_params=tr.num_params(),
        sweeps=sweeps,
        wall_time_s=time.perf_counter() - start,
        converged=converged,
        seed=opts.seed,
    )
    return tr, report
