"""Synthetic transaction logs drawn from a fully specified model.

Plays are simulated as continuous-time Markov chains: an initial action
hands the ball to a player, holding times come from thinning the holder's
total hazard against a constant envelope, and each accepted event picks a
destination cluster or outcome in proportion to the instantaneous rates.
The generator is the ground-truth factory for every parameter-recovery test.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .events import INITIAL_ACTIONS, OUTCOMES, Event, Play, TransactionLog
from .likelihood import (MODE_SIMPLIFIED, ClusterParams, params_from_dict,
                         params_to_dict)
from .splines import PLAY_SECONDS

TRUTH_FORMAT = "csbm-truth/1"

# hard cap on thinning proposals per play; only reachable with absurd rates
_MAX_PROPOSALS = 5_000_000


class NoEligibleReceiverError(RuntimeError):
    """The initial draw found no on-court player in any reachable cluster."""


@dataclass
class SimSpec:
    """Everything needed to simulate: parameters, true labels, lineups and
    the mix of initial actions."""

    params: ClusterParams
    players: tuple[str, ...]
    labels: np.ndarray               # (n,) cluster per player, 0-based
    lineups: tuple[tuple[str, ...], ...]
    initial_mix: np.ndarray          # (|S|,) probabilities
    n_plays: int = 100
    max_time: float = PLAY_SECONDS
    game_id: str = "sim"

    def __post_init__(self):
        self.players = tuple(self.players)
        self.labels = np.asarray(self.labels, dtype=int)
        self.lineups = tuple(tuple(lineup) for lineup in self.lineups)
        self.initial_mix = np.asarray(self.initial_mix, dtype=float)

    def validate(self) -> None:
        self.params.validate()
        n = len(self.players)
        if len(set(self.players)) != n:
            raise ValueError("duplicate player ids")
        if self.labels.shape != (n,):
            raise ValueError("one label per player required")
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= self.params.k:
            raise ValueError("labels out of range")
        if abs(self.initial_mix.sum() - 1.0) > 1e-8 or np.any(self.initial_mix < 0):
            raise ValueError("initial mix must be a probability vector")
        if not self.lineups:
            raise ValueError("at least one lineup required")
        roster = set(self.players)
        for lineup in self.lineups:
            if len(lineup) < 2:
                raise ValueError("every lineup needs at least 2 players")
            if len(set(lineup)) != len(lineup):
                raise ValueError("duplicate player in lineup")
            if not set(lineup) <= roster:
                raise ValueError("lineup player not in roster")
        if self.n_plays < 0:
            raise ValueError("n_plays must be nonnegative")

    @property
    def label_of(self) -> dict:
        return {p: int(c) for p, c in zip(self.players, self.labels)}


def _envelope(coeffs: np.ndarray) -> float:
    # the basis is a nonnegative partition of unity, so the rate is a convex
    # combination of exp(c_p) and max_p exp(c_p) dominates it everywhere
    return float(np.exp(coeffs).max())


def simulate_play(spec: SimSpec, rng: np.random.Generator,
                  lineup: tuple[str, ...] | None = None,
                  play_id: str = "p1") -> Play:
    """Simulate one play; truncates (censored, no outcome row) at max_time."""
    params = spec.params
    k = params.k
    lineup = tuple(lineup) if lineup is not None else spec.lineups[0]
    court = tuple(sorted(lineup))
    members = [[p for p in lineup if spec.label_of[p] == c] for c in range(k)]
    counts = np.array([len(m) for m in members])

    s = int(rng.choice(len(spec.initial_mix), p=spec.initial_mix))
    # the initial-cluster draw renormalizes over clusters that actually have
    # an on-court member; an empty cluster cannot receive
    start_weights = params.p_init[s] * (counts > 0)
    if start_weights.sum() <= 0:
        raise NoEligibleReceiverError(
            f"no eligible receiver for initial action {INITIAL_ACTIONS[s]}")
    start_weights = start_weights / start_weights.sum()
    cluster = int(rng.choice(k, p=start_weights))
    # within the receiving cluster every on-court player is equally likely
    holder = members[cluster][int(rng.integers(len(members[cluster])))]
    events = [Event(src=INITIAL_ACTIONS[s], dst=holder, time=0.0,
                    oncourt=court)]

    t = 0.0
    proposals = 0
    n_out = params.n_outcomes
    while True:
        c_hold = spec.label_of[holder]
        avail = counts.copy()
        avail[c_hold] -= 1
        open_clusters = avail > 0
        if params.mode == MODE_SIMPLIFIED:
            w = float(params.p_pass[c_hold][open_clusters].sum()
                      + params.p_out[c_hold].sum())
            if w <= 0.0:
                break  # nothing reachable: hold until the clock runs out
            env = _envelope(params.lam_coeffs[c_hold])
        else:
            env = sum(_envelope(params.rho_coeffs[c_hold, l])
                      for l in range(k) if open_clusters[l])
            env += sum(_envelope(params.eta_coeffs[c_hold, a])
                       for a in range(n_out))
            if env <= 0.0:
                break
        while True:
            proposals += 1
            if proposals > _MAX_PROPOSALS:
                raise RuntimeError("thinning envelope too large to simulate")
            t += rng.exponential(1.0 / env)
            if t > spec.max_time:
                return Play(game_id=spec.game_id, play_id=play_id,
                            events=tuple(events))
            weights = _destination_weights(params, c_hold, open_clusters, t)
            hazard = float(weights.sum())
            assert hazard <= env * (1.0 + 1e-9)
            if rng.random() * env < hazard:
                break
        dest = int(rng.choice(k + n_out, p=weights / hazard))
        if dest < k:
            receiver = _uniform_receiver(members[dest], holder, rng)
            events.append(Event(src=holder, dst=receiver,
                                time=float(t), oncourt=court))
            holder = receiver
        else:
            events.append(Event(src=holder, dst=OUTCOMES[dest - k],
                                time=float(t), oncourt=court))
            return Play(game_id=spec.game_id, play_id=play_id,
                        events=tuple(events))
    return Play(game_id=spec.game_id, play_id=play_id, events=tuple(events))


def _destination_weights(params: ClusterParams, c_hold: int,
                         open_clusters: np.ndarray, t: float) -> np.ndarray:
    """Instantaneous rates toward each cluster and outcome at time t."""
    k, n_out = params.k, params.n_outcomes
    basis_row = params.basis.design(t)[0]
    if params.mode == MODE_SIMPLIFIED:
        lam = float(basis_row @ np.exp(params.lam_coeffs[c_hold]))
        return lam * np.concatenate([params.p_pass[c_hold] * open_clusters,
                                     params.p_out[c_hold]])
    rho = np.exp(params.rho_coeffs[c_hold]) @ basis_row * open_clusters
    eta = np.exp(params.eta_coeffs[c_hold]) @ basis_row
    return np.concatenate([rho, eta])


def _uniform_receiver(candidates: list, holder: str,
                      rng: np.random.Generator) -> str:
    options = [p for p in candidates if p != holder]
    return options[int(rng.integers(len(options)))]


def simulate_log(spec: SimSpec, n_plays: int | None = None,
                 rng: np.random.Generator | None = None) -> TransactionLog:
    """Simulate independent plays, cycling through the lineup schedule."""
    spec.validate()
    if rng is None:
        rng = np.random.default_rng(0)
    count = spec.n_plays if n_plays is None else n_plays
    plays = []
    for i in range(count):
        lineup = spec.lineups[i % len(spec.lineups)]
        plays.append(simulate_play(spec, rng, lineup,
                                   play_id=f"p{i + 1:05d}"))
    roster = sorted({p for play in plays for ev in play.events
                     for p in ev.oncourt})
    return TransactionLog(plays=tuple(plays), players=tuple(roster))


# ---------------------------------------------------------------------------
# Truth sidecar: the simulation spec itself, echoed next to the log so
# recovery benchmarks can score against it.
# ---------------------------------------------------------------------------

def spec_to_dict(spec: SimSpec, seed: int | None = None) -> dict:
    d = {"format": TRUTH_FORMAT,
         "players": list(spec.players),
         "labels": {p: int(c) + 1 for p, c in zip(spec.players, spec.labels)},
         "lineups": [list(lineup) for lineup in spec.lineups],
         "initial_mix": spec.initial_mix.tolist(),
         "n_plays": int(spec.n_plays),
         "max_time": float(spec.max_time),
         "game_id": spec.game_id,
         "params": params_to_dict(spec.params)}
    if seed is not None:
        d["seed"] = int(seed)
    return d


def spec_from_dict(d: dict) -> SimSpec:
    if d.get("format", TRUTH_FORMAT) != TRUTH_FORMAT:
        raise ValueError("not a simulation spec / truth document")
    params = params_from_dict(d["params"])
    players = list(d["players"])
    labels = np.array([int(d["labels"][p]) - 1 for p in players], dtype=int)
    return SimSpec(params=params, players=tuple(players), labels=labels,
                   lineups=tuple(tuple(l) for l in d["lineups"]),
                   initial_mix=np.asarray(d["initial_mix"], dtype=float),
                   n_plays=int(d.get("n_plays", 100)),
                   max_time=float(d.get("max_time", PLAY_SECONDS)),
                   game_id=str(d.get("game_id", "sim")))


def save_spec(spec: SimSpec, path, seed: int | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec, seed), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_spec(path) -> SimSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))
