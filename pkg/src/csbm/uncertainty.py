"""Pointwise confidence bands for fitted rate functions.

Conditional on the final hard labels, the observed information over each
rate function's spline coefficients is the negative Hessian of the labeled
log-likelihood.  Point terms contribute rank-one pieces from the normalized
basis weights; exposure terms contribute a diagonal.  The delta method then
propagates coefficient uncertainty to the rate scale, se(r(t))^2 =
g' I^{-1} g with g_p = exp(c_p) B_p(t).

Label uncertainty is ignored (the bands condition on the labels).  The
multinomial standard errors for the probability parameters are a reporting
extension beyond the rate bands.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .events import SufficientStats
from .inference import ExpectationSet
from .likelihood import (ClusterParams, ModelArrays, as_hard_labels,
                         rate_blocks)


class NonStationaryWarning(RuntimeWarning):
    """Information requested away from a stationary point."""


@dataclass
class InfoMatrix:
    """Observed information, one block per rate function."""

    mode: str
    names: list          # ("lam", k) | ("rho", k, l) | ("eta", k, a)
    matrices: list
    coeffs: list
    singular: list
    grad_norms: list

    def block(self, name):
        return self.matrices[self.names.index(name)]


def _block_info(block) -> tuple[np.ndarray, float]:
    """Negative Hessian of one block's objective, plus its gradient norm."""
    c = block.coeffs
    ec = np.exp(c)
    rate = block.design @ ec
    w = block.weights
    active = w > 0
    g_rows = (block.design * ec) / np.where(rate > 0, rate, 1.0)[:, None]
    g_rows = g_rows[active]
    wa = w[active]
    info = (g_rows * wa[:, None]).T @ g_rows
    info -= np.diag((g_rows * wa[:, None]).sum(axis=0))
    info += np.diag(block.exposure * ec)
    grad = (g_rows * wa[:, None]).sum(axis=0) - block.exposure * ec
    return info, float(np.linalg.norm(grad))


def observed_info(stats: SufficientStats, labels, params: ClusterParams,
                  arrays: ModelArrays | None = None,
                  grad_tol: float = 1e-3) -> InfoMatrix:
    """Observed information of the hard-label log-likelihood in the rate
    coefficients, one symmetric PSD block per rate function.

    Warns (does not fail) when the gradient norm suggests the parameters are
    not at a stationary point.
    """
    hard = as_hard_labels(labels, stats.n_players)
    if arrays is None:
        arrays = ModelArrays(stats, params.basis)
    exps = ExpectationSet.from_hard(stats, hard, params.k, arrays)
    blocks = rate_blocks(stats, exps, params, arrays)
    names, mats, coeffs, singular, grads = [], [], [], [], []
    for b in blocks:
        info, gnorm = _block_info(b)
        names.append(b.name)
        mats.append(info)
        coeffs.append(b.coeffs)
        grads.append(gnorm)
        rank = np.linalg.matrix_rank(info, hermitian=True)
        singular.append(bool(rank < info.shape[0]))
        if gnorm > grad_tol:
            warnings.warn(f"block {b.name}: gradient norm {gnorm:.2e} "
                          "suggests a non-stationary point",
                          NonStationaryWarning, stacklevel=2)
    return InfoMatrix(mode=params.mode, names=names, matrices=mats,
                      coeffs=coeffs, singular=singular, grad_norms=grads)


@dataclass
class BandTable:
    """Pointwise band for one rate function on a time grid."""

    name: str
    times: np.ndarray
    rate: np.ndarray
    se: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    singular: bool


def _block_label(name, outcomes) -> str:
    if name[0] == "lam":
        return str(name[1] + 1)
    if name[0] == "rho":
        return f"{name[1] + 1}->{name[2] + 1}"
    return f"{name[1] + 1}->{outcomes[name[2]]}"


def rate_bands(params: ClusterParams, info: InfoMatrix,
               grid: np.ndarray | None = None, level: float = 0.95,
               outcomes: tuple = ()) -> list[BandTable]:
    """Delta-method bands rate +- z(level) * se on a time grid.

    Singular information blocks fall back to the pseudo-inverse and are
    flagged.  The lower band is floored at zero.
    """
    if grid is None:
        grid = np.linspace(params.basis.t_min, params.basis.t_max, 241)
    grid = np.asarray(grid, dtype=float)
    if not 0.0 <= level < 1.0:
        raise ValueError("level must be in [0, 1)")
    z = float(norm.ppf(0.5 + level / 2.0))
    design = params.basis.design(grid)
    tables = []
    for name, mat, coeffs, singular in zip(info.names, info.matrices,
                                           info.coeffs, info.singular):
        ec = np.exp(coeffs)
        rate = design @ ec
        g = design * ec
        if singular:
            inv = np.linalg.pinv(mat, hermitian=True)
        else:
            try:
                inv = np.linalg.inv(mat)
            except np.linalg.LinAlgError:
                inv = np.linalg.pinv(mat, hermitian=True)
                singular = True
        var = np.einsum("gp,pq,gq->g", g, inv, g)
        se = np.sqrt(np.clip(var, 0.0, None))
        tables.append(BandTable(name=_block_label(name, outcomes),
                                times=grid, rate=rate, se=se,
                                lower=np.clip(rate - z * se, 0.0, None),
                                upper=rate + z * se,
                                singular=bool(singular)))
    return tables


def bands_csv(tables: list[BandTable]) -> str:
    """Rate-grid export: cluster,t,rate,se_lower,se_upper rows."""
    lines = ["cluster,t,rate,se_lower,se_upper"]
    for tab in tables:
        for t, r, lo, hi in zip(tab.times, tab.rate, tab.lower, tab.upper):
            lines.append(f"{tab.name},{float(t)!r},{float(r)!r},"
                         f"{float(lo)!r},{float(hi)!r}")
    return "\n".join(lines) + "\n"


def prob_standard_errors(stats: SufficientStats, labels, k: int) -> dict:
    """Multinomial standard errors for the probability tables, computed from
    the hard-label counts.  A reporting extension: the bands above cover the
    rate functions only.
    """
    hard = as_hard_labels(labels, stats.n_players)
    z = np.eye(k)[hard]
    out = {}
    n_init = stats.m_init.astype(float) @ z
    tot = n_init.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(tot > 0, n_init / tot, 0.0)
        out["p_init"] = {"estimate": p,
                         "se": np.where(tot > 0,
                                        np.sqrt(p * (1 - p) / tot), 0.0)}
    n_pass = z[stats.pass_send].T @ z[stats.pass_recv] \
        if len(stats.pass_send) else np.zeros((k, k))
    n_out = z.T @ stats.m_out.astype(float)
    counts = np.concatenate([n_pass, n_out], axis=1)
    tot = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(tot > 0, counts / tot, 0.0)
        out["trans"] = {"estimate": p,
                        "se": np.where(tot > 0,
                                       np.sqrt(p * (1 - p) / tot), 0.0)}
    return out
