"""Model fitting: Gibbs-sampled E-step, closed-form probability updates,
quasi-Newton rate updates, and a best-neighbor local search on top of EM.

The probability parameters (cluster marginals, initial-action rows, and in
the simplified mode the transition rows) all have closed-form maximizers, so
they are treated as "fast" parameters and refreshed from the current hard
labels whenever a Gibbs conditional or a neighbor score is computed.  The
spline coefficients are "slow": they are only refit by the quasi-Newton step.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .events import SufficientStats, TransactionLog, derive_stats
from .likelihood import (MODE_GENERAL, MODE_SIMPLIFIED, ClusterParams,
                         CompleteLoglik, LabelState, ModelArrays,
                         as_hard_labels, estep_objective, interacting_pairs,
                         loglik_complete, params_from_dict, params_to_dict,
                         rate_blocks)
from .splines import COEFF_BOUND, SplineBasis

FIT_FORMAT = "csbm-fit/1"


class FitInfeasibleError(RuntimeError):
    """No labeling with finite likelihood exists for this model and data."""


@dataclass
class FitConfig:
    """Tuning knobs for the fitting pipeline."""

    k: int
    mode: str = MODE_SIMPLIFIED
    nbasis: int = 8
    degree: int = 3
    n_restarts: int = 10
    gibbs_burnin: int = 10
    gibbs_samples: int = 40
    em_max_iters: int = 25
    plus_max_steps: int = 50
    rate_tol: float = 1e-6
    rate_max_iters: int = 200
    root_tol: float = 1e-10
    seed: int = 0
    on_the_fly: bool = True        # refresh fast params inside Gibbs/neighbor scans
    plus_refit_rates: bool = True  # full refit at each accepted neighbor move
    threads: int = 1
    include_truncated: bool = False

    def validate(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.mode not in (MODE_SIMPLIFIED, MODE_GENERAL):
            raise ValueError(f"unknown mode {self.mode!r}")
        if min(self.n_restarts, self.gibbs_samples) < 1:
            raise ValueError("restart and sample counts must be at least 1")
        if min(self.gibbs_burnin, self.em_max_iters, self.plus_max_steps) < 0:
            raise ValueError("iteration counts must be nonnegative")
        if min(self.rate_tol, self.root_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

    def make_basis(self) -> SplineBasis:
        return SplineBasis.uniform(self.nbasis, self.degree)


@dataclass
class ExpectationSet:
    """Conditional expectations of the label indicators given the data.

    `ez` holds E[z_ik]; `ezz` holds E[z_ik z_jl] for the ordered pairs in
    `pairs` (only pairs with at least one pass interact through the
    likelihood); `ezind` holds E[z_ik * 1(cluster l has an eligible
    receiver)] per possession.
    """

    ez: np.ndarray            # (n, K)
    pairs: np.ndarray         # (R, 2)
    ezz: np.ndarray           # (R, K, K)
    ezind: np.ndarray         # (H, K, K)

    def validate(self) -> None:
        for arr in (self.ez, self.ezz, self.ezind):
            if np.any(arr < -1e-9) or np.any(arr > 1 + 1e-9):
                raise ValueError("expectations outside [0, 1]")
        if np.max(np.abs(self.ez.sum(axis=1) - 1.0), initial=0.0) > 1e-8:
            raise ValueError("ez rows must sum to 1")

    @classmethod
    def from_hard(cls, stats: SufficientStats, labels, k: int,
                  arrays: ModelArrays | None = None) -> "ExpectationSet":
        hard = as_hard_labels(labels, stats.n_players)
        z = np.eye(k)[hard]
        if arrays is not None:
            pairs, c_poss = arrays.pairs, arrays.C_poss
        else:
            pairs, _ = interacting_pairs(stats)
            c_poss = stats.poss_oncourt.astype(float)
        ezz = np.einsum("rk,rl->rkl", z[pairs[:, 0]], z[pairs[:, 1]]) \
            if len(pairs) else np.zeros((0, k, k))
        avail = (c_poss @ z - z[stats.poss_holder]) > 0
        ezind = np.einsum("hk,hl->hkl", z[stats.poss_holder],
                          avail.astype(float))
        return cls(ez=z, pairs=pairs, ezz=ezz, ezind=ezind)


# ---------------------------------------------------------------------------
# M-step: closed-form probability updates
# ---------------------------------------------------------------------------

def _solve_transition_row(numer: np.ndarray, denom: np.ndarray,
                          tol: float = 1e-10) -> np.ndarray | None:
    """Row of transition probabilities p_c = numer_c / (denom_c + zeta)
    with the multiplier zeta chosen so the row sums to one.

    The row sum is strictly decreasing in zeta, so the root is unique; it is
    bracketed between the pole that keeps all active denominators positive
    and a geometrically grown upper bound.  Returns None when the row has no
    expected events (nothing constrains it).
    """
    active = numer > 0
    if not active.any():
        return None
    num_a, den_a = numer[active], denom[active]

    def f(zeta: float) -> float:
        return float(np.sum(num_a / (den_a + zeta)) - 1.0)

    lo = float(np.max(-den_a))
    a = lo + 1e-12 * (1.0 + abs(lo))
    while f(a) <= 0.0:
        # pole not sharp enough at this offset; tighten toward it
        a = lo + (a - lo) * 1e-3
        if a - lo < 1e-300:
            raise FitInfeasibleError("transition row root not bracketed")
    b = lo + max(1.0, float(num_a.sum()))
    while f(b) >= 0.0:
        b = lo + (b - lo) * 2.0
    zeta = brentq(f, a, b, xtol=min(tol, 1e-12))
    row = np.zeros_like(numer, dtype=float)
    row[active] = num_a / (den_a + zeta)
    if abs(row.sum() - 1.0) > 1e-8:
        raise FitInfeasibleError("transition row failed to normalize")
    return np.clip(row, 0.0, 1.0)


def mstep_probs(stats: SufficientStats, expectations: ExpectationSet,
                params: ClusterParams, arrays: ModelArrays | None = None,
                root_tol: float = 1e-10) -> ClusterParams:
    """Closed-form updates of pi, the initial-action rows, and (simplified
    mode) the transition rows.  Rows with no expected events keep their
    incoming values: an empty cluster contributes no likelihood term that
    would constrain them.
    """
    ez = expectations.ez
    out = params.copy()
    out.pi = ez.mean(axis=0)

    n_init = stats.m_init.astype(float) @ ez
    row_tot = n_init.sum(axis=1)
    for s in range(n_init.shape[0]):
        if row_tot[s] > 0:
            out.p_init[s] = n_init[s] / row_tot[s]

    if params.mode == MODE_SIMPLIFIED:
        if arrays is None:
            arrays = ModelArrays(stats, params.basis)
        lam = arrays.J_poss @ np.exp(params.lam_coeffs).T   # (H, K)
        m_pair = stats.m_pass[expectations.pairs[:, 0],
                              expectations.pairs[:, 1]].astype(float)
        n_pass = np.einsum("r,rkl->kl", m_pair, expectations.ezz) \
            if len(m_pair) else np.zeros((params.k, params.k))
        d_pass = np.einsum("hkl,hk->kl", expectations.ezind, lam)
        n_out = ez.T @ stats.m_out.astype(float)
        d_out = (ez[stats.poss_holder] * lam).sum(axis=0) \
            if stats.n_poss else np.zeros(params.k)
        for k in range(params.k):
            numer = np.concatenate([n_pass[k], n_out[k]])
            denom = np.concatenate([d_pass[k],
                                    np.full(n_out.shape[1], d_out[k])])
            row = _solve_transition_row(numer, denom, root_tol)
            if row is not None:
                out.trans[k] = row
    return out


def _hard_fast_probs(arrays: ModelArrays, lam: np.ndarray | None,
                     hard: np.ndarray, params: ClusterParams):
    """Closed-form probability updates from hard labels.

    `lam` is the (H, K) exposure table under the current rate coefficients;
    it is only needed in simplified mode.  Returns (pi, p_init, trans).
    """
    stats = arrays.stats
    k = params.k
    z = np.eye(k)[hard]
    counts = z.sum(axis=0)
    pi = counts / len(hard)

    n_init = stats.m_init.astype(float) @ z
    p_init = params.p_init.copy()
    row_tot = n_init.sum(axis=1)
    nz = row_tot > 0
    p_init[nz] = n_init[nz] / row_tot[nz, None]

    trans = None
    if params.mode == MODE_SIMPLIFIED:
        trans = params.trans.copy()
        n_pass = z[stats.pass_send].T @ z[stats.pass_recv] \
            if len(stats.pass_send) else np.zeros((k, k))
        n_out = z.T @ stats.m_out.astype(float)
        if stats.n_poss:
            e_h = hard[stats.poss_holder]
            lam_h = lam[np.arange(stats.n_poss), e_h]
            avail = (arrays.C_poss @ z - z[stats.poss_holder]) > 0
            d_pass = z[stats.poss_holder].T @ (avail * lam_h[:, None])
            d_out = np.bincount(e_h, weights=lam_h, minlength=k)
        else:
            d_pass = np.zeros((k, k))
            d_out = np.zeros(k)
        for c in range(k):
            numer = np.concatenate([n_pass[c], n_out[c]])
            denom = np.concatenate([d_pass[c],
                                    np.full(n_out.shape[1], d_out[c])])
            row = _solve_transition_row(numer, denom)
            if row is not None:
                trans[c] = row
    return pi, p_init, trans


# ---------------------------------------------------------------------------
# M-step: quasi-Newton rate updates
# ---------------------------------------------------------------------------

def mstep_rates(stats: SufficientStats, expectations: ExpectationSet,
                params: ClusterParams, config: FitConfig | None = None,
                arrays: ModelArrays | None = None) -> ClusterParams:
    """Maximize the expected objective over the spline coefficients.

    Each rate function is a separable block, optimized by bounded L-BFGS
    with the analytic gradient.  The block objective never ends below its
    value at the incoming coefficients.
    """
    tol = config.rate_tol if config else 1e-6
    max_iters = config.rate_max_iters if config else 200
    blocks = rate_blocks(stats, expectations, params, arrays)
    out = params.copy()
    bounds = [(-COEFF_BOUND, COEFF_BOUND)] * params.basis.nbasis
    for b in blocks:
        x0 = np.clip(b.coeffs, -COEFF_BOUND, COEFF_BOUND)
        v0 = b.value_grad(x0)[0]
        if not np.isfinite(v0):
            raise FitInfeasibleError(
                f"rate objective non-finite at start for block {b.name}")

        def neg(c, block=b):
            v, g = block.value_grad(c)
            return -v, -g

        res = minimize(neg, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": max_iters, "gtol": tol,
                                "ftol": 1e-14})
        new = res.x if b.value_grad(res.x)[0] >= v0 else x0
        if b.name[0] == "lam":
            out.lam_coeffs[b.name[1]] = new
        elif b.name[0] == "rho":
            out.rho_coeffs[b.name[1], b.name[2]] = new
        else:
            out.eta_coeffs[b.name[1], b.name[2]] = new
    return out


# ---------------------------------------------------------------------------
# E-step
# ---------------------------------------------------------------------------

def _accumulators(stats, pairs, k):
    return (np.zeros((stats.n_players, k)),
            np.zeros((len(pairs), k, k)),
            np.zeros((stats.n_poss, k, k)))


def _accumulate(stats, pairs, z, ez_sum, ezz_sum, ezind_sum, c_poss):
    ez_sum += z
    if len(pairs):
        ezz_sum += np.einsum("rk,rl->rkl", z[pairs[:, 0]], z[pairs[:, 1]])
    if stats.n_poss:
        avail = ((c_poss @ z - z[stats.poss_holder]) > 0).astype(float)
        ezind_sum += np.einsum("hk,hl->hkl", z[stats.poss_holder], avail)


def gibbs_estep(stats: SufficientStats, params: ClusterParams,
                config: FitConfig, rng: np.random.Generator,
                init_labels=None, arrays: ModelArrays | None = None
                ) -> ExpectationSet:
    """Systematic-scan Gibbs over player labels.

    Each conditional is the softmax over the K candidate labels of the full
    labeled log-likelihood; with `config.on_the_fly` the closed-form
    probability parameters are refreshed from the candidate labeling before
    each evaluation.  Indicator products are averaged over the retained
    sweeps.
    """
    k, n = params.k, stats.n_players
    evaluator = CompleteLoglik(stats, params, arrays)
    arrays = evaluator.arrays
    if k == 1:
        return ExpectationSet.from_hard(stats, np.zeros(n, dtype=int), 1,
                                        arrays)
    if init_labels is not None:
        hard = as_hard_labels(init_labels, n).copy()
    else:
        hard = rng.choice(k, size=n, p=params.pi / params.pi.sum())
    lam = evaluator.tables.Lam if params.mode == MODE_SIMPLIFIED else None

    ez_sum, ezz_sum, ezind_sum = _accumulators(stats, arrays.pairs, k)
    retained = 0
    cand = np.empty(k)
    for sweep in range(config.gibbs_burnin + config.gibbs_samples):
        for i in range(n):
            for c in range(k):
                hard[i] = c
                if config.on_the_fly:
                    evaluator.set_probs(*_hard_fast_probs(arrays, lam, hard,
                                                          params))
                cand[c] = evaluator.value(hard)
            top = cand.max()
            if not np.isfinite(top):
                raise FitInfeasibleError(
                    f"player {stats.players[i]!r} has no feasible cluster")
            probs = np.exp(cand - top)
            probs /= probs.sum()
            assert abs(probs.sum() - 1.0) < 1e-12
            hard[i] = int(np.searchsorted(np.cumsum(probs), rng.random(),
                                          side="right"))
        if sweep >= config.gibbs_burnin:
            retained += 1
            _accumulate(stats, arrays.pairs, np.eye(k)[hard],
                        ez_sum, ezz_sum, ezind_sum, arrays.C_poss)
    return ExpectationSet(ez=ez_sum / retained, pairs=arrays.pairs,
                          ezz=ezz_sum / retained, ezind=ezind_sum / retained)


def exact_estep(stats: SufficientStats, params: ClusterParams,
                arrays: ModelArrays | None = None) -> ExpectationSet:
    """Exact conditional expectations by enumerating every labeling.

    Exponential in the number of players; intended as the small-instance
    oracle the sampled E-step is checked against.
    """
    k, n = params.k, stats.n_players
    if k ** n > 2 ** 20:
        raise ValueError("instance too large for exact enumeration")
    evaluator = CompleteLoglik(stats, params, arrays)
    arrays = evaluator.arrays
    labelings = list(itertools.product(range(k), repeat=n))
    lls = np.array([evaluator.value(np.array(e, dtype=int))
                    for e in labelings])
    top = lls.max()
    if not np.isfinite(top):
        raise FitInfeasibleError("no labeling has finite likelihood")
    w = np.exp(lls - top)
    w /= w.sum()
    ez_sum, ezz_sum, ezind_sum = _accumulators(stats, arrays.pairs, k)
    for weight, e in zip(w, labelings):
        if weight == 0.0:
            continue
        z = np.eye(k)[np.array(e, dtype=int)]
        ez_sum += weight * z
        if len(arrays.pairs):
            ezz_sum += weight * np.einsum("rk,rl->rkl",
                                          z[arrays.pairs[:, 0]],
                                          z[arrays.pairs[:, 1]])
        if stats.n_poss:
            avail = ((arrays.C_poss @ z - z[stats.poss_holder]) > 0)
            ezind_sum += weight * np.einsum("hk,hl->hkl",
                                            z[stats.poss_holder],
                                            avail.astype(float))
    return ExpectationSet(ez=ez_sum, pairs=arrays.pairs, ezz=ezz_sum,
                          ezind=ezind_sum)


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    params: ClusterParams
    labels: LabelState
    loglik: float
    trace: list = field(default_factory=list)
    restarts: list = field(default_factory=list)
    converged: bool = True
    plus_steps: int = 0


def _neutral_params(stats: SufficientStats, config: FitConfig,
                    basis: SplineBasis) -> ClusterParams:
    k = config.k
    n_actions = len(stats.initial_actions)
    n_out = len(stats.outcomes)
    releases = len(stats.pass_send) + len(stats.out_send)
    exposure = stats.total_exposure
    rate = releases / exposure if exposure > 0 else 1.0
    c0 = float(np.clip(np.log(max(rate, 1e-8)), -COEFF_BOUND, COEFF_BOUND))
    pi = np.full(k, 1.0 / k)
    p_init = np.full((n_actions, k), 1.0 / k)
    if config.mode == MODE_SIMPLIFIED:
        return ClusterParams(
            k=k, pi=pi, p_init=p_init, basis=basis, mode=MODE_SIMPLIFIED,
            lam_coeffs=np.full((k, basis.nbasis), c0),
            trans=np.full((k, k + n_out), 1.0 / (k + n_out)))
    split = c0 - np.log(k + n_out)
    return ClusterParams(
        k=k, pi=pi, p_init=p_init, basis=basis, mode=MODE_GENERAL,
        rho_coeffs=np.full((k, k, basis.nbasis), split),
        eta_coeffs=np.full((k, n_out, basis.nbasis), split))


def _refit_hard(stats, hard, params, config, arrays,
                refit_rates: bool = True, max_rounds: int = 25) -> ClusterParams:
    """Fit parameters to a fixed hard labeling.

    The probability and rate updates are alternated until the labeled
    log-likelihood stabilizes, starting from a neutral parameter point so
    the refit is a pure function of the labeling.  Path independence keeps
    the neighbor search's configuration scores comparable: the simplified
    parameterization is a non-convex constraint surface, and warm starts
    can otherwise land different labelings on different local optima.
    """
    exps = ExpectationSet.from_hard(stats, hard, config.k, arrays)
    out = _neutral_params(stats, config, params.basis)
    if not refit_rates:
        out.lam_coeffs = None if params.lam_coeffs is None \
            else params.lam_coeffs.copy()
        out.rho_coeffs = None if params.rho_coeffs is None \
            else params.rho_coeffs.copy()
        out.eta_coeffs = None if params.eta_coeffs is None \
            else params.eta_coeffs.copy()
        return mstep_probs(stats, exps, out, arrays, config.root_tol)
    last = -np.inf
    for _ in range(max_rounds):
        out = mstep_probs(stats, exps, out, arrays, config.root_tol)
        out = mstep_rates(stats, exps, out, config, arrays)
        current = loglik_complete(stats, hard, out, arrays)
        if current - last <= 1e-8 * (1.0 + abs(current)):
            break
        last = current
    return out


def run_em(stats: SufficientStats, config: FitConfig,
           rng: np.random.Generator, init_labels,
           arrays: ModelArrays | None = None) -> FitResult:
    """EM from one starting labeling.

    Parameters are first fit to the initial hard labels; each iteration then
    runs the sampled E-step and the two M-step halves, and stops when the
    hard labels (argmax of ez) no longer change.
    """
    config.validate()
    hard = as_hard_labels(init_labels, stats.n_players)
    basis = config.make_basis()
    if arrays is None:
        arrays = ModelArrays(stats, basis)
    params = _neutral_params(stats, config, basis)
    params = _refit_hard(stats, hard, params, config, arrays)

    trace = []
    labels = hard.copy()
    converged = False
    for iteration in range(config.em_max_iters):
        exps = gibbs_estep(stats, params, config, rng, init_labels=labels,
                           arrays=arrays)
        q_start = estep_objective(stats, exps, params, arrays)
        params = mstep_probs(stats, exps, params, arrays, config.root_tol)
        q_probs = estep_objective(stats, exps, params, arrays)
        params = mstep_rates(stats, exps, params, config, arrays)
        q_rates = estep_objective(stats, exps, params, arrays)
        new_labels = exps.ez.argmax(axis=1)
        changed = not np.array_equal(new_labels, labels)
        labels = new_labels
        trace.append({"iteration": iteration + 1,
                      "loglik": loglik_complete(stats, labels, params,
                                                arrays),
                      "objective_start": q_start,
                      "objective_after_probs": q_probs,
                      "objective_after_rates": q_rates,
                      "labels_changed": changed})
        if not changed:
            converged = True
            break
    loglik = loglik_complete(stats, labels, params, arrays)
    return FitResult(params=params,
                     labels=LabelState.from_hard(labels, config.k),
                     loglik=loglik, trace=trace, converged=converged)


def run_plus(stats: SufficientStats, fit: FitResult, config: FitConfig,
             arrays: ModelArrays | None = None) -> FitResult:
    """Best-neighbor local search after EM.

    At each step every single-label neighbor of the current labeling is
    scored under the current rate coefficients (fast probabilities refreshed
    per candidate), the best neighbor is accepted even when it is worse, and
    the parameters are refit.  Stops when a labeling repeats (a cycle) or
    after `plus_max_steps`.  Returns the best configuration ever visited.
    """
    config.validate()
    k, n = config.k, stats.n_players
    if arrays is None:
        arrays = ModelArrays(stats, fit.params.basis)
    labels = fit.labels.hard.copy()
    params = fit.params
    evaluator = CompleteLoglik(stats, params, arrays)

    best_ll, best_labels, best_params = fit.loglik, labels.copy(), params
    visited = {labels.tobytes()}
    steps = []
    for step in range(config.plus_max_steps):
        if k == 1:
            break
        evaluator.set_params(params)
        lam = evaluator.tables.Lam if params.mode == MODE_SIMPLIFIED else None
        best_move, best_score = None, -np.inf
        for i in range(n):
            original = labels[i]
            for c in range(k):
                if c == original:
                    continue
                labels[i] = c
                if config.on_the_fly:
                    evaluator.set_probs(*_hard_fast_probs(arrays, lam,
                                                          labels, params))
                score = evaluator.value(labels)
                if score > best_score:
                    best_score, best_move = score, (i, c)
            labels[i] = original
        if best_move is None:
            break
        labels[best_move[0]] = best_move[1]
        params = _refit_hard(stats, labels, params, config, arrays,
                             refit_rates=config.plus_refit_rates)
        ll = loglik_complete(stats, labels, params, arrays)
        steps.append({"step": step + 1, "player": int(best_move[0]),
                      "cluster": int(best_move[1]) + 1, "loglik": ll})
        if ll > best_ll:
            best_ll, best_labels, best_params = ll, labels.copy(), params
        key = labels.tobytes()
        if key in visited:
            break
        visited.add(key)
    return FitResult(params=best_params,
                     labels=LabelState.from_hard(best_labels, k),
                     loglik=best_ll, trace=steps, converged=fit.converged,
                     plus_steps=len(steps))


def fit_csbm(log: TransactionLog, config: FitConfig) -> FitResult:
    """Multi-restart EM followed by the neighbor search; returns the best
    restart.  Deterministic given `config.seed`: restart r draws from an
    independent stream seeded by (seed, r), and results are merged in
    restart order.
    """
    config.validate()
    stats = derive_stats(log, include_truncated=config.include_truncated)
    n = stats.n_players
    if config.k > n:
        raise ValueError("more clusters than players")
    basis = config.make_basis()
    arrays = ModelArrays(stats, basis)

    def one_restart(r: int):
        rng = np.random.default_rng([config.seed, r])
        init = rng.integers(0, config.k, size=n)
        try:
            em = run_em(stats, config, rng, init, arrays)
            plus = run_plus(stats, em, config, arrays)
        except FitInfeasibleError as exc:
            return {"restart": r, "feasible": False, "error": str(exc)}, None
        summary = {"restart": r, "feasible": True,
                   "em_iterations": len(em.trace),
                   "em_converged": em.converged,
                   "em_loglik": em.loglik,
                   "plus_steps": plus.plus_steps,
                   "loglik": plus.loglik,
                   "em_trace": em.trace}
        return summary, plus

    indices = range(config.n_restarts)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(one_restart, indices))
    else:
        outcomes = [one_restart(r) for r in indices]

    best = None
    summaries = []
    for summary, result in outcomes:
        summaries.append(summary)
        if result is not None and (best is None or result.loglik > best.loglik):
            best = result
    if best is None:
        raise FitInfeasibleError("all restarts infeasible")
    best.restarts = summaries
    return best


# ---------------------------------------------------------------------------
# Fit document (single structured, versioned text format)
# ---------------------------------------------------------------------------

def fit_to_document(fit: FitResult, config: FitConfig, players,
                    version: str) -> dict:
    return {"format": FIT_FORMAT,
            "version": version,
            "config": asdict(config),
            "players": list(players),
            "labels": [int(c) + 1 for c in fit.labels.hard],
            "loglik": fit.loglik,
            "converged": bool(fit.converged),
            "params": params_to_dict(fit.params),
            "trace": fit.trace,
            "restarts": fit.restarts}


def document_to_fit(doc: dict):
    """Returns (FitResult, FitConfig, players) from a fit document."""
    if doc.get("format") != FIT_FORMAT:
        raise ValueError("not a fit document")
    params = params_from_dict(doc["params"])
    labels = LabelState.from_hard(np.asarray(doc["labels"], dtype=int) - 1,
                                  params.k)
    fit = FitResult(params=params, labels=labels,
                    loglik=float(doc["loglik"]),
                    trace=list(doc.get("trace", [])),
                    restarts=list(doc.get("restarts", [])),
                    converged=bool(doc.get("converged", True)))
    config = FitConfig(**doc["config"])
    return fit, config, list(doc["players"])
