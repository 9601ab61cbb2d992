from __future__ import annotations

import numpy as np
import pytest

import csbm
from csbm import ClusterParams, SimSpec
from csbm.likelihood import MODE_GENERAL, MODE_SIMPLIFIED

# Two sample plays in the wire format: an inbound play ending in a missed
# two, and a rebound play ending in a missed three.  The inbounder C5 is off
# the court for the inbound event itself.
SAMPLE_CSV = """game_id,play_id,from,to,time,oncourt
g1,p1,INBOUND,C9,0.0,C9|C20|C30|C34
g1,p1,C9,C5,11.0,C5|C9|C20|C30|C34
g1,p1,C5,MISS2,12.0,C5|C9|C20|C30|C34
g1,p2,REBOUND,H6,0.0,H3|H6|H15|H21|H31
g1,p2,H6,H3,7.0,H3|H6|H15|H21|H31
g1,p2,H3,H15,8.0,H3|H6|H15|H21|H31
g1,p2,H15,H3,9.0,H3|H6|H15|H21|H31
g1,p2,H3,H6,12.0,H3|H6|H15|H21|H31
g1,p2,H6,MISS3,17.0,H3|H6|H15|H21|H31
"""

N_OUT = len(csbm.OUTCOMES)


@pytest.fixture
def sample_log():
    return csbm.parse_transactions(SAMPLE_CSV)


@pytest.fixture
def sample_stats(sample_log):
    return csbm.derive_stats(sample_log)


def random_simplified_params(rng, k, basis, spread=0.6):
    lam = rng.normal(np.log(0.5), spread, (k, basis.nbasis))
    trans = rng.dirichlet(np.full(k + N_OUT, 2.0), size=k)
    p_init = rng.dirichlet(np.full(k, 2.0), size=3)
    pi = rng.dirichlet(np.full(k, 4.0))
    return ClusterParams(k=k, pi=pi, p_init=p_init, basis=basis,
                         mode=MODE_SIMPLIFIED, lam_coeffs=lam, trans=trans)


def random_general_params(rng, k, basis, spread=0.5):
    rho = rng.normal(np.log(0.15), spread, (k, k, basis.nbasis))
    eta = rng.normal(np.log(0.06), spread, (k, N_OUT, basis.nbasis))
    p_init = rng.dirichlet(np.full(k, 2.0), size=3)
    pi = rng.dirichlet(np.full(k, 4.0))
    return ClusterParams(k=k, pi=pi, p_init=p_init, basis=basis,
                         mode=MODE_GENERAL, rho_coeffs=rho, eta_coeffs=eta)


def small_instance(seed, n_players=5, k=2, n_plays=30, nbasis=6,
                   lineup_size=4, spread=0.6):
    """Random simulated instance: (log, stats, generating params, labels).

    Lineups rotate so that cluster membership on court varies; stats include
    truncated plays so the raw plays and the derived statistics describe
    exactly the same data.
    """
    rng = np.random.default_rng(seed)
    basis = csbm.SplineBasis.uniform(nbasis)
    players = tuple(f"P{i}" for i in range(n_players))
    labels = np.array([i % k for i in range(n_players)])
    params = random_simplified_params(rng, k, basis, spread)
    lineups = []
    for start in range(n_players):
        lineups.append(tuple(players[(start + j) % n_players]
                             for j in range(lineup_size)))
    spec = SimSpec(params=params, players=players, labels=labels,
                   lineups=tuple(lineups),
                   initial_mix=np.array([0.5, 0.3, 0.2]), n_plays=n_plays)
    log = csbm.simulate_log(spec, rng=rng)
    stats = csbm.derive_stats(log, include_truncated=True)
    order = {p: i for i, p in enumerate(players)}
    true_hard = np.array([labels[order[p]] for p in log.players])
    return log, stats, params, true_hard


def random_expectations(rng, stats, k):
    """A valid random ExpectationSet (rows sum to one, entries in [0,1])."""
    from csbm.inference import ExpectationSet
    from csbm.likelihood import interacting_pairs
    n = stats.n_players
    ez = rng.dirichlet(np.full(k, 1.5), size=n)
    pairs, _ = interacting_pairs(stats)
    ezz = (np.einsum("rk,rl->rkl", ez[pairs[:, 0]], ez[pairs[:, 1]])
           if len(pairs) else np.zeros((0, k, k)))
    avail = rng.random((stats.n_poss, k))
    ezind = ez[stats.poss_holder][:, :, None] * avail[:, None, :]
    return ExpectationSet(ez=ez, pairs=pairs, ezz=ezz, ezind=ezind)
