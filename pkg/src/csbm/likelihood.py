"""Labeled log-likelihood of the continuous-time block model.

Each observed transaction contributes a point term log r(t) and each
possession interval contributes exposure terms -integral r, following the
inhomogeneous-Poisson factorization.  Receiver choice within a cluster is
uniform over the eligible players, so point terms also carry -log G where G
counts eligible receivers in the receiving cluster.

Two parameterizations are supported.  The general one gives every ordered
cluster pair a pass rate rho_kl(t) and every (cluster, outcome) pair a rate
eta_ka(t).  The simplified one factors both through a single departure rate
per cluster, rho_kl = lam_k * P_kl and eta_ka = lam_k * P_ka, with the rows
(P_k1..P_kK, P_k,outcomes) summing to one.

All accumulation is in the log domain; impossible configurations (an
observed event whose probability is zero) evaluate to -inf.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .events import SufficientStats
from .splines import SplineBasis, validate_coeffs

MODE_SIMPLIFIED = "simplified"
MODE_GENERAL = "general"


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


@dataclass
class LabelState:
    """Hard cluster labels, optionally with indicator/expectation rows."""

    hard: np.ndarray
    z: np.ndarray | None = None

    def __post_init__(self):
        self.hard = np.asarray(self.hard, dtype=int)
        if self.z is not None:
            self.z = np.asarray(self.z, dtype=float)

    @classmethod
    def from_hard(cls, hard, k: int) -> "LabelState":
        hard = np.asarray(hard, dtype=int)
        return cls(hard=hard, z=np.eye(k)[hard])

    def validate(self, k: int) -> None:
        if self.hard.min(initial=0) < 0 or self.hard.max(initial=0) >= k:
            raise ValueError("labels out of range")
        if self.z is not None:
            if self.z.shape != (len(self.hard), k):
                raise ValueError("indicator matrix has wrong shape")
            if np.any(self.z < -1e-12) or np.any(self.z > 1 + 1e-12):
                raise ValueError("indicator entries outside [0, 1]")
            if np.max(np.abs(self.z.sum(axis=1) - 1.0)) > 1e-8:
                raise ValueError("indicator rows must sum to 1")


def as_hard_labels(labels, n: int | None = None) -> np.ndarray:
    """Coerce a LabelState, hard vector, or one-hot matrix to hard labels."""
    if isinstance(labels, LabelState):
        hard = labels.hard
    else:
        arr = np.asarray(labels)
        if arr.ndim == 2:
            if not np.all((arr == 0) | (arr == 1)):
                raise ValueError("indicator matrix must be one-hot here")
            hard = arr.argmax(axis=1)
        else:
            hard = arr.astype(int)
    if n is not None and hard.shape != (n,):
        raise ValueError("labels must assign a cluster to every player")
    return np.asarray(hard, dtype=int)


@dataclass
class ClusterParams:
    """Full parameter set: cluster marginals, initial-action probabilities,
    and rate functions in one of the two parameterizations."""

    k: int
    pi: np.ndarray
    p_init: np.ndarray        # (|S|, K), rows sum to 1
    basis: SplineBasis
    mode: str = MODE_SIMPLIFIED
    lam_coeffs: np.ndarray | None = None   # (K, P) simplified
    trans: np.ndarray | None = None        # (K, K+|A|) simplified
    rho_coeffs: np.ndarray | None = None   # (K, K, P) general
    eta_coeffs: np.ndarray | None = None   # (K, |A|, P) general

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        self.p_init = np.asarray(self.p_init, dtype=float)
        for name in ("lam_coeffs", "trans", "rho_coeffs", "eta_coeffs"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, np.asarray(v, dtype=float))

    @property
    def n_outcomes(self) -> int:
        if self.mode == MODE_SIMPLIFIED:
            return self.trans.shape[1] - self.k
        return self.eta_coeffs.shape[1]

    @property
    def p_pass(self) -> np.ndarray:
        return self.trans[:, :self.k]

    @property
    def p_out(self) -> np.ndarray:
        return self.trans[:, self.k:]

    def validate(self) -> None:
        k = self.k
        if self.pi.shape != (k,) or np.any(self.pi < 0) or np.any(self.pi > 1):
            raise ValueError("pi must be K probabilities")
        if abs(self.pi.sum() - 1.0) > 1e-8:
            raise ValueError("pi must sum to 1")
        if self.p_init.ndim != 2 or self.p_init.shape[1] != k:
            raise ValueError("p_init must have K columns")
        if np.any(self.p_init < 0) or np.any(self.p_init > 1 + 1e-12):
            raise ValueError("p_init entries outside [0, 1]")
        if np.max(np.abs(self.p_init.sum(axis=1) - 1.0)) > 1e-8:
            raise ValueError("p_init rows must sum to 1")
        if self.mode == MODE_SIMPLIFIED:
            if self.lam_coeffs is None or self.trans is None:
                raise ValueError("simplified mode needs lam_coeffs and trans")
            validate_coeffs(self.lam_coeffs, self.basis)
            if self.lam_coeffs.shape[0] != k:
                raise ValueError("need one coefficient row per cluster")
            if self.trans.shape[0] != k or self.trans.shape[1] <= k:
                raise ValueError("transition matrix must be K x (K+|A|)")
            if np.any(self.trans < -1e-12) or np.any(self.trans > 1 + 1e-12):
                raise ValueError("transition entries outside [0, 1]")
            if np.max(np.abs(self.trans.sum(axis=1) - 1.0)) > 1e-8:
                raise ValueError("transition rows must sum to 1")
        elif self.mode == MODE_GENERAL:
            if self.rho_coeffs is None or self.eta_coeffs is None:
                raise ValueError("general mode needs rho_coeffs and eta_coeffs")
            for arr, shape in ((self.rho_coeffs, (k, k, self.basis.nbasis)),
                               (self.eta_coeffs,
                                (k, self.eta_coeffs.shape[1],
                                 self.basis.nbasis))):
                if arr.shape != shape:
                    raise ValueError("rate coefficient block has wrong shape")
                # -inf encodes an exactly-zero rate (e.g. converted from a
                # zero transition probability); NaN and +inf are invalid
                if np.any(np.isnan(arr)) or np.any(arr == np.inf):
                    raise ValueError("invalid rate coefficients")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    def to_general(self) -> "ClusterParams":
        """Rewrite simplified parameters as per-pair rate functions."""
        if self.mode == MODE_GENERAL:
            return self
        rho = self.lam_coeffs[:, None, :] + _log(self.p_pass)[:, :, None]
        eta = self.lam_coeffs[:, None, :] + _log(self.p_out)[:, :, None]
        return ClusterParams(k=self.k, pi=self.pi.copy(),
                             p_init=self.p_init.copy(), basis=self.basis,
                             mode=MODE_GENERAL, rho_coeffs=rho,
                             eta_coeffs=eta)

    def copy(self) -> "ClusterParams":
        return dataclasses.replace(
            self,
            pi=self.pi.copy(), p_init=self.p_init.copy(),
            lam_coeffs=None if self.lam_coeffs is None else self.lam_coeffs.copy(),
            trans=None if self.trans is None else self.trans.copy(),
            rho_coeffs=None if self.rho_coeffs is None else self.rho_coeffs.copy(),
            eta_coeffs=None if self.eta_coeffs is None else self.eta_coeffs.copy())


def params_to_dict(params: ClusterParams) -> dict:
    d = {"k": params.k, "mode": params.mode,
         "pi": params.pi.tolist(), "p_init": params.p_init.tolist(),
         "basis": params.basis.to_dict()}
    if params.mode == MODE_SIMPLIFIED:
        d["lam_coeffs"] = params.lam_coeffs.tolist()
        d["trans"] = params.trans.tolist()
    else:
        d["rho_coeffs"] = params.rho_coeffs.tolist()
        d["eta_coeffs"] = params.eta_coeffs.tolist()
    return d


def params_from_dict(d: dict) -> ClusterParams:
    basis = SplineBasis.from_dict(d["basis"])
    kw = {"k": int(d["k"]), "pi": d["pi"], "p_init": d["p_init"],
          "basis": basis, "mode": d["mode"]}
    for name in ("lam_coeffs", "trans", "rho_coeffs", "eta_coeffs"):
        if name in d:
            kw[name] = np.asarray(d[name], dtype=float)
    return ClusterParams(**kw)


class ModelArrays:
    """Data-side precomputation shared by every likelihood evaluation:
    basis values at event times, per-possession basis integrals, and
    on-court membership matrices ready for matrix products."""

    def __init__(self, stats: SufficientStats, basis: SplineBasis):
        self.stats = stats
        self.basis = basis
        self.B_pass = basis.design(stats.pass_time)
        self.B_out = basis.design(stats.out_time)
        self.J_poss = basis.span_integrals(stats.poss_open, stats.poss_close)
        self.C_init = stats.init_oncourt.astype(float)
        self.C_pass = stats.pass_oncourt.astype(float)
        self.C_poss = stats.poss_oncourt.astype(float)
        self.pairs, self.pass_pair = interacting_pairs(stats)

    @property
    def n(self) -> int:
        return self.stats.n_players


def interacting_pairs(stats: SufficientStats):
    """Ordered player pairs with at least one pass, in row-major order,
    plus the pair row index of every pass event."""
    pairs = np.argwhere(stats.m_pass > 0)
    lookup = {(int(i), int(j)): r for r, (i, j) in enumerate(pairs)}
    pass_pair = np.array([lookup[(int(i), int(j))]
                          for i, j in zip(stats.pass_send, stats.pass_recv)],
                         dtype=int)
    return pairs, pass_pair


class RateTables:
    """Parameter-side precomputation: log rates at event times, exposure
    integrals per possession, and log probability tables.  The probability
    part can be swapped without touching the rate part, which is what the
    on-the-fly updates during Gibbs scans and neighbor scoring do."""

    def __init__(self, arrays: ModelArrays, params: ClusterParams):
        self.arrays = arrays
        self.params = params
        self.mode = params.mode
        if params.mode == MODE_SIMPLIFIED:
            w = np.exp(params.lam_coeffs)          # (K, P)
            self.lam_pass = arrays.B_pass @ w.T    # (E_P, K)
            self.lam_out = arrays.B_out @ w.T      # (E_O, K)
            self.log_lam_pass = _log(self.lam_pass)
            self.log_lam_out = _log(self.lam_out)
            self.Lam = arrays.J_poss @ w.T         # (H, K)
        else:
            wr = np.exp(params.rho_coeffs)         # (K, K, P)
            we = np.exp(params.eta_coeffs)         # (K, A, P)
            self.rho_pass = np.einsum("ep,klp->ekl", arrays.B_pass, wr)
            self.log_rho_pass = _log(self.rho_pass)
            eta_all = np.einsum("ep,kap->eka", arrays.B_out, we)
            kinds = arrays.stats.out_kind
            self.eta_out = eta_all[np.arange(len(kinds)), :, kinds]  # (E_O, K)
            self.log_eta_out = _log(self.eta_out)
            self.Lam_rho = np.einsum("hp,klp->hkl", arrays.J_poss, wr)
            self.Lam_eta = np.einsum("hp,kap->hka", arrays.J_poss, we)
            self.Lam_eta_sum = self.Lam_eta.sum(axis=2)  # (H, K)
        self.set_probs(params.pi, params.p_init,
                       params.trans if params.mode == MODE_SIMPLIFIED else None)

    def set_probs(self, pi, p_init, trans=None) -> None:
        self.pi = np.asarray(pi, dtype=float)
        self.log_pi = _log(self.pi)
        self.p_init = np.asarray(p_init, dtype=float)
        self.log_p_init = _log(self.p_init)
        if self.mode == MODE_SIMPLIFIED:
            k = self.params.k
            self.trans = np.asarray(trans, dtype=float)
            self.p_pass = self.trans[:, :k]
            self.p_out_sum = self.trans[:, k:].sum(axis=1)
            self.log_p_pass = _log(self.p_pass)
            self.log_p_out = _log(self.trans[:, k:])


def _hard_parts(arrays: ModelArrays, tables: RateTables, hard: np.ndarray):
    """(initial, passes, outcomes, marginal) log-likelihood parts."""
    stats = arrays.stats
    k = tables.params.k
    Z = np.eye(k)[hard]

    marg = float(tables.log_pi[hard].sum())

    if len(stats.init_action):
        G = (arrays.C_init @ Z)[np.arange(len(stats.init_recv)),
                                hard[stats.init_recv]]
        ll_init = float(tables.log_p_init[stats.init_action,
                                          hard[stats.init_recv]].sum()
                        - _log(G).sum())
    else:
        ll_init = 0.0

    ll_pass = 0.0
    if len(stats.pass_send):
        recv_cl = hard[stats.pass_recv]
        rows = np.arange(len(stats.pass_send))
        G = (arrays.C_pass @ Z)[rows, recv_cl] - Z[stats.pass_send, recv_cl]
        if tables.mode == MODE_SIMPLIFIED:
            pts = (tables.log_lam_pass[rows, hard[stats.pass_send]]
                   + tables.log_p_pass[hard[stats.pass_send], recv_cl])
        else:
            pts = tables.log_rho_pass[rows, hard[stats.pass_send], recv_cl]
        ll_pass += float(pts.sum() - _log(G).sum())

    ll_out = 0.0
    if len(stats.out_send):
        rows = np.arange(len(stats.out_send))
        if tables.mode == MODE_SIMPLIFIED:
            pts = (tables.log_lam_out[rows, hard[stats.out_send]]
                   + tables.log_p_out[hard[stats.out_send], stats.out_kind])
        else:
            pts = tables.log_eta_out[rows, hard[stats.out_send]]
        ll_out += float(pts.sum())

    if stats.n_poss:
        e_h = hard[stats.poss_holder]
        avail = (arrays.C_poss @ Z - Z[stats.poss_holder]) > 0
        if tables.mode == MODE_SIMPLIFIED:
            w = (avail * tables.p_pass[e_h]).sum(axis=1)
            lam_h = tables.Lam[np.arange(stats.n_poss), e_h]
            ll_pass -= float((lam_h * w).sum())
            ll_out -= float((lam_h * tables.p_out_sum[e_h]).sum())
        else:
            rows = np.arange(stats.n_poss)
            ll_pass -= float((avail * tables.Lam_rho[rows, e_h]).sum())
            ll_out -= float(tables.Lam_eta_sum[rows, e_h].sum())

    return ll_init, ll_pass, ll_out, marg


class CompleteLoglik:
    """Repeated labeled log-likelihood evaluation for one data set."""

    def __init__(self, stats: SufficientStats, params: ClusterParams,
                 arrays: ModelArrays | None = None):
        self.arrays = arrays if arrays is not None else ModelArrays(stats, params.basis)
        self.tables = RateTables(self.arrays, params)

    @property
    def params(self) -> ClusterParams:
        return self.tables.params

    def set_params(self, params: ClusterParams) -> None:
        self.tables = RateTables(self.arrays, params)

    def set_probs(self, pi, p_init, trans=None) -> None:
        self.tables.set_probs(pi, p_init, trans)

    def value(self, hard: np.ndarray) -> float:
        parts = _hard_parts(self.arrays, self.tables, hard)
        return float(sum(parts))

    def parts(self, hard: np.ndarray):
        return _hard_parts(self.arrays, self.tables, hard)


def _evaluator(stats, labels, params, arrays=None):
    hard = as_hard_labels(labels, stats.n_players)
    ev = CompleteLoglik(stats, params, arrays)
    return hard, ev


def loglik_initial(stats, labels, params, arrays=None) -> float:
    """Initiation component: log P_{s,e_i} - log G per initial event."""
    hard, ev = _evaluator(stats, labels, params, arrays)
    return ev.parts(hard)[0]


def loglik_passes(stats, labels, params, arrays=None) -> float:
    """Pass component: point terms plus availability-gated exposure terms."""
    hard, ev = _evaluator(stats, labels, params, arrays)
    return ev.parts(hard)[1]


def loglik_outcomes(stats, labels, params, arrays=None) -> float:
    """Outcome component: point terms plus exposure terms over all outcomes."""
    hard, ev = _evaluator(stats, labels, params, arrays)
    return ev.parts(hard)[2]


def loglik_complete(stats, labels, params, arrays=None) -> float:
    """Full labeled log-likelihood including the label marginal.

    This is the quantity the Gibbs conditionals and the neighbor search
    rank, so the label-dependent -log G terms are included.
    """
    hard, ev = _evaluator(stats, labels, params, arrays)
    return ev.value(hard)


# ---------------------------------------------------------------------------
# Expected complete log-likelihood (the objective maximized in the M-step)
# and its analytic gradient in the rate coefficients.  The -log G terms are
# constant in the parameters and omitted throughout.
# ---------------------------------------------------------------------------

def _masked_xlogy(counts, logs) -> float:
    with np.errstate(invalid="ignore"):
        vals = np.where(counts > 0, counts * logs, 0.0)
    return float(vals.sum())


def _pair_counts(arrays: ModelArrays, ezz: np.ndarray) -> np.ndarray:
    """Expected pass counts per ordered cluster pair, (K, K)."""
    stats = arrays.stats
    m = stats.m_pass[arrays.pairs[:, 0], arrays.pairs[:, 1]]
    return np.einsum("r,rkl->kl", m.astype(float), ezz)


def simplified_gap_weights(arrays: ModelArrays, expectations,
                           params: ClusterParams) -> np.ndarray:
    """Per-possession weights v[h,k] multiplying the exposure of lam_k."""
    stats = arrays.stats
    v = np.einsum("hkl,kl->hk", expectations.ezind, params.p_pass)
    v += expectations.ez[stats.poss_holder] * params.p_out.sum(axis=1)
    return v


def estep_objective(stats, expectations, params, arrays=None) -> float:
    """Expected complete log-likelihood under the given expectations."""
    if arrays is None:
        arrays = ModelArrays(stats, params.basis)
    tables = RateTables(arrays, params)
    ez = expectations.ez

    total = _masked_xlogy(ez.sum(axis=0), tables.log_pi)
    total += _masked_xlogy(stats.m_init.astype(float) @ ez, tables.log_p_init)

    if params.mode == MODE_SIMPLIFIED:
        if len(stats.pass_send):
            total += float((ez[stats.pass_send] * tables.log_lam_pass).sum())
            total += _masked_xlogy(_pair_counts(arrays, expectations.ezz),
                                   tables.log_p_pass)
        if len(stats.out_send):
            total += float((ez[stats.out_send] * tables.log_lam_out).sum())
            n_ka = ez.T @ stats.m_out.astype(float)
            total += _masked_xlogy(n_ka, tables.log_p_out)
        if stats.n_poss:
            v = simplified_gap_weights(arrays, expectations, params)
            total -= float((v * tables.Lam).sum())
    else:
        if len(stats.pass_send):
            w = expectations.ezz[arrays.pass_pair]
            total += float(np.einsum("ekl,ekl->", w, tables.log_rho_pass))
        if len(stats.out_send):
            total += float((ez[stats.out_send] * tables.log_eta_out).sum())
        if stats.n_poss:
            total -= float(np.einsum("hkl,hkl->", expectations.ezind,
                                     tables.Lam_rho))
            total -= float((ez[stats.poss_holder] * tables.Lam_eta_sum).sum())
    return total


@dataclass
class RateBlock:
    """One separable piece of the rate objective.

    The expected objective restricted to this block's coefficients c is
    Q(c) = w . log(B exp(c)) - u . exp(c), maximized independently of every
    other block.
    """

    name: tuple
    weights: np.ndarray   # (E,) point-term weights
    design: np.ndarray    # (E, P) basis rows at the event times
    exposure: np.ndarray  # (P,) expectation-weighted basis integrals
    coeffs: np.ndarray    # (P,) current coefficients

    def value_grad(self, c):
        ec = np.exp(c)
        rate = self.design @ ec
        active = self.weights > 0
        val = float(np.dot(self.weights[active], _log(rate[active]))
                    - np.dot(self.exposure, ec))
        ratio = np.zeros_like(rate)
        np.divide(self.weights, rate, out=ratio, where=active & (rate > 0))
        grad = (ratio @ self.design) * ec - self.exposure * ec
        return val, grad


def rate_blocks(stats, expectations, params, arrays=None) -> list[RateBlock]:
    """Separable objective blocks for every rate function being fit."""
    if arrays is None:
        arrays = ModelArrays(stats, params.basis)
    ez = expectations.ez
    blocks = []
    if params.mode == MODE_SIMPLIFIED:
        v = simplified_gap_weights(arrays, expectations, params)
        design = np.vstack([arrays.B_pass, arrays.B_out])
        for k in range(params.k):
            w = np.concatenate([ez[stats.pass_send, k], ez[stats.out_send, k]])
            u = v[:, k] @ arrays.J_poss
            blocks.append(RateBlock(("lam", k), w, design, u,
                                    params.lam_coeffs[k].copy()))
    else:
        ezz_ev = expectations.ezz[arrays.pass_pair] if len(stats.pass_send) \
            else np.zeros((0, params.k, params.k))
        for k in range(params.k):
            for l in range(params.k):
                u = expectations.ezind[:, k, l] @ arrays.J_poss
                blocks.append(RateBlock(("rho", k, l), ezz_ev[:, k, l],
                                        arrays.B_pass, u,
                                        params.rho_coeffs[k, l].copy()))
            u_out = ez[stats.poss_holder, k] @ arrays.J_poss
            for a in range(params.n_outcomes):
                mask = stats.out_kind == a
                blocks.append(RateBlock(("eta", k, a),
                                        ez[stats.out_send[mask], k],
                                        arrays.B_out[mask], u_out,
                                        params.eta_coeffs[k, a].copy()))
    return blocks


def grad_rate_coeffs(stats, expectations, params, arrays=None):
    """Analytic gradient of the expected objective in the rate coefficients.

    Returns an array shaped like lam_coeffs in simplified mode, or a
    (rho-gradient, eta-gradient) pair in general mode.
    """
    blocks = rate_blocks(stats, expectations, params, arrays)
    if params.mode == MODE_SIMPLIFIED:
        grad = np.zeros_like(params.lam_coeffs)
        for b in blocks:
            grad[b.name[1]] = b.value_grad(b.coeffs)[1]
        return grad
    grad_rho = np.zeros_like(params.rho_coeffs)
    grad_eta = np.zeros_like(params.eta_coeffs)
    for b in blocks:
        g = b.value_grad(b.coeffs)[1]
        if b.name[0] == "rho":
            grad_rho[b.name[1], b.name[2]] = g
        else:
            grad_eta[b.name[1], b.name[2]] = g
    return grad_rho, grad_eta
