"""Transaction-log parsing, validation and possession bookkeeping.

Wire format: CSV with header ``game_id,play_id,from,to,time,oncourt`` where
``oncourt`` is a ``|``-separated list of the offensive players on the floor
at the event.  Lines starting with ``#`` are comments.  Plays are groups of
consecutive rows sharing (game_id, play_id).

`derive_stats` turns a validated log into the count and interval statistics
the likelihood consumes: per-player possession intervals, endpoint counts,
and the on-court sets that determine eligible receivers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .splines import PLAY_SECONDS

INITIAL_ACTIONS = ("INBOUND", "REBOUND", "STEAL")
OUTCOMES = ("MAKE2", "MISS2", "MAKE3", "MISS3", "FOULED", "TO")
_RESERVED = set(INITIAL_ACTIONS) | set(OUTCOMES)

HEADER = "game_id,play_id,from,to,time,oncourt"

# possession end kinds
END_PASS = 0
END_OUTCOME = 1
END_CENSORED = 2


class ParseError(ValueError):
    """Malformed or invalid input row; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class InconsistentPlayError(ValueError):
    """A play whose events break the sender/receiver chain."""


@dataclass(frozen=True)
class ParseOptions:
    # Unknown from/to tokens (not reserved, not on court anywhere) raise by
    # default; with skip_unknown the enclosing play is dropped instead.
    skip_unknown: bool = False


@dataclass(frozen=True)
class Event:
    src: str
    dst: str
    time: float
    oncourt: tuple[str, ...]  # sorted

    @property
    def is_initiation(self) -> bool:
        return self.src in INITIAL_ACTIONS

    @property
    def is_outcome(self) -> bool:
        return self.dst in OUTCOMES


@dataclass(frozen=True)
class Play:
    game_id: str
    play_id: str
    events: tuple[Event, ...]
    team: str = ""

    @property
    def truncated(self) -> bool:
        """True when the play does not end in an absorbing outcome."""
        return not self.events or not self.events[-1].is_outcome


@dataclass(frozen=True)
class TransactionLog:
    plays: tuple[Play, ...]
    players: tuple[str, ...]
    initial_actions: tuple[str, ...] = INITIAL_ACTIONS
    outcomes: tuple[str, ...] = OUTCOMES

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def n_events(self) -> int:
        return sum(len(p.events) for p in self.plays)


def _iter_lines(source) -> Iterable[str]:
    if isinstance(source, str):
        return source.splitlines()
    return source


def parse_transactions(source, options: ParseOptions | None = None) -> TransactionLog:
    """Parse the CSV wire format into a validated TransactionLog.

    `source` is a string or an iterable of lines (an open file works).
    """
    options = options or ParseOptions()
    rows = []  # (line, game, play, src, dst, time, oncourt tuple)
    header_seen = False
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.rstrip("\r\n").strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != HEADER:
                raise ParseError(f"expected header '{HEADER}'", lineno)
            header_seen = True
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 6:
            raise ParseError(f"expected 6 fields, got {len(fields)}", lineno)
        game, play, src, dst, time_s, oncourt_s = fields
        try:
            time = float(time_s)
        except ValueError:
            raise ParseError(f"unparsable time '{time_s}'", lineno) from None
        if not (0.0 <= time <= PLAY_SECONDS):
            raise ParseError("time outside play limit", lineno)
        names = [p for p in oncourt_s.split("|") if p]
        if not names:
            raise ParseError("empty oncourt set", lineno)
        if len(set(names)) != len(names):
            raise ParseError("duplicate player in oncourt set", lineno)
        for name in names:
            if name in _RESERVED:
                raise ParseError(f"reserved token '{name}' in oncourt set", lineno)
        if src in OUTCOMES:
            raise ParseError(f"outcome token '{src}' cannot send", lineno)
        if dst in INITIAL_ACTIONS:
            raise ParseError(f"initial-action token '{dst}' cannot receive", lineno)
        if src in INITIAL_ACTIONS and dst in OUTCOMES:
            raise ParseError("event joins an initial action directly to an outcome", lineno)
        if src not in INITIAL_ACTIONS and dst not in OUTCOMES and src == dst:
            raise ParseError(f"sender and receiver are both '{src}'", lineno)
        rows.append((lineno, game, play, src, dst, time, tuple(sorted(names))))

    # Group consecutive rows into plays; a (game_id, play_id) pair may not
    # reappear after the group has closed.
    groups: list[dict] = []
    seen_keys = set()
    current_key = None
    for row in rows:
        key = (row[1], row[2])
        if key != current_key:
            if key in seen_keys:
                raise ParseError(f"play id {key[1]!r} of game {key[0]!r} reused "
                                 "in non-consecutive rows", row[0])
            seen_keys.add(key)
            groups.append({"key": key, "rows": []})
            current_key = key
        groups[-1]["rows"].append(row)

    # Token validation needs the full roster: a player id that never appears
    # in any oncourt set is an unknown token, while a known player missing
    # from its own row's oncourt set is a hard error.
    court_ids = {n for g in groups for row in g["rows"] for n in row[6]}
    plays = []
    for g in groups:
        game, play_id = g["key"]
        events = []
        skip_play = False
        last_time = None
        for lineno, _, _, src, dst, time, oncourt in g["rows"]:
            for role, tok in (("sender", src), ("receiver", dst)):
                if tok in _RESERVED:
                    continue
                if tok not in oncourt:
                    if tok in court_ids:
                        raise ParseError(f"{role} '{tok}' not in oncourt set", lineno)
                    if options.skip_unknown:
                        skip_play = True
                        break
                    raise ParseError(f"unknown token '{tok}'", lineno)
            if skip_play:
                break
            if last_time is not None and time < last_time:
                raise ParseError("events out of order within play", lineno)
            last_time = time
            events.append(Event(src=src, dst=dst, time=time, oncourt=oncourt))
        if skip_play:
            continue
        plays.append(Play(game_id=game, play_id=play_id, events=tuple(events)))

    roster = sorted({p for play in plays for ev in play.events
                     for p in ev.oncourt}
                    | {ev.src for play in plays for ev in play.events
                       if ev.src not in _RESERVED}
                    | {ev.dst for play in plays for ev in play.events
                       if ev.dst not in _RESERVED})
    return TransactionLog(plays=tuple(plays), players=tuple(roster))


def write_csv(log: TransactionLog) -> str:
    """Serialize a log back to the wire format (round-trip identical)."""
    lines = [HEADER]
    for play in log.plays:
        for ev in play.events:
            lines.append(",".join([play.game_id, play.play_id, ev.src, ev.dst,
                                   repr(ev.time), "|".join(ev.oncourt)]))
    return "\n".join(lines) + "\n"


def load_log(path, options: ParseOptions | None = None) -> TransactionLog:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_transactions(fh, options)


def save_log(log: TransactionLog, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_csv(log))


@dataclass(frozen=True, eq=False)
class SufficientStats:
    """Event arrays and possession intervals derived from a log.

    All player references are integer indices into `players`.  On-court sets
    are boolean membership matrices with one row per event or possession.
    Possession h of its holder runs over (poss_open[h], poss_close[h]] and
    ends in a pass, an outcome, or censoring (mid-play stoppage or a
    truncated play).
    """

    players: tuple[str, ...]
    initial_actions: tuple[str, ...]
    outcomes: tuple[str, ...]

    init_action: np.ndarray   # (E_I,) index into initial_actions
    init_recv: np.ndarray     # (E_I,) player index
    init_time: np.ndarray
    init_oncourt: np.ndarray  # (E_I, n) bool

    pass_send: np.ndarray     # (E_P,)
    pass_recv: np.ndarray
    pass_time: np.ndarray
    pass_oncourt: np.ndarray  # (E_P, n) bool

    out_send: np.ndarray      # (E_O,)
    out_kind: np.ndarray      # (E_O,) index into outcomes
    out_time: np.ndarray
    out_oncourt: np.ndarray   # (E_O, n) bool

    poss_holder: np.ndarray   # (H,)
    poss_open: np.ndarray
    poss_close: np.ndarray
    poss_oncourt: np.ndarray  # (H, n) bool
    poss_end: np.ndarray      # (H,) END_PASS | END_OUTCOME | END_CENSORED

    m_init: np.ndarray        # (|S|, n)
    m_pass: np.ndarray        # (n, n)
    m_out: np.ndarray         # (n, |A|)

    truncated_plays: tuple[int, ...] = ()
    includes_truncated: bool = False

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def n_poss(self) -> int:
        return len(self.poss_holder)

    @property
    def n_events(self) -> int:
        return len(self.init_action) + len(self.pass_send) + len(self.out_send)

    @property
    def possessions_per_player(self) -> np.ndarray:
        return np.bincount(self.poss_holder, minlength=self.n_players)

    @property
    def total_exposure(self) -> float:
        return float(np.sum(self.poss_close - self.poss_open))


def derive_stats(log: TransactionLog, include_truncated: bool = False) -> SufficientStats:
    """Count endpoints and extract possession intervals from a log.

    Truncated plays (no absorbing outcome) are flagged and skipped unless
    `include_truncated`; when included, the dangling possession closes at the
    last observed event time as a censored interval.
    """
    idx = {p: i for i, p in enumerate(log.players)}
    s_idx = {s: i for i, s in enumerate(log.initial_actions)}
    a_idx = {a: i for i, a in enumerate(log.outcomes)}
    n = len(log.players)

    init_rec, pass_rec, out_rec, poss_rec = [], [], [], []
    truncated = []

    def court_row(oncourt):
        row = np.zeros(n, dtype=bool)
        for p in oncourt:
            row[idx[p]] = True
        return row

    for play_no, play in enumerate(log.plays):
        if play.truncated:
            truncated.append(play_no)
            if not include_truncated:
                continue
        holder = None
        hold_start = None
        hold_court = None
        for ev_no, ev in enumerate(play.events):
            court = court_row(ev.oncourt)
            if ev.is_initiation:
                if holder is not None:
                    # mid-play stoppage: the previous possession is censored
                    poss_rec.append((holder, hold_start, ev.time, hold_court,
                                     END_CENSORED))
                init_rec.append((s_idx[ev.src], idx[ev.dst], ev.time, court))
                holder, hold_start, hold_court = idx[ev.dst], ev.time, court
            elif ev.is_outcome:
                sender = idx[ev.src]
                if holder is None:
                    if ev_no != 0:
                        raise InconsistentPlayError(
                            f"play {play.play_id!r}: outcome without a holder")
                    holder, hold_start, hold_court = sender, ev.time, court
                if sender != holder:
                    raise InconsistentPlayError(
                        f"play {play.play_id!r}: event sender "
                        f"{ev.src!r} is not the ball holder")
                out_rec.append((sender, a_idx[ev.dst], ev.time, court))
                poss_rec.append((sender, hold_start, ev.time, court, END_OUTCOME))
                holder = None
            else:
                sender, recv = idx[ev.src], idx[ev.dst]
                if holder is None:
                    if ev_no != 0:
                        raise InconsistentPlayError(
                            f"play {play.play_id!r}: pass after an outcome "
                            "without re-initiation")
                    holder, hold_start, hold_court = sender, ev.time, court
                if sender != holder:
                    raise InconsistentPlayError(
                        f"play {play.play_id!r}: event sender "
                        f"{ev.src!r} is not the ball holder")
                pass_rec.append((sender, recv, ev.time, court))
                poss_rec.append((sender, hold_start, ev.time, court, END_PASS))
                holder, hold_start, hold_court = recv, ev.time, court
        if holder is not None:
            # truncated tail: close at the last observed event time
            poss_rec.append((holder, hold_start, hold_start, hold_court,
                             END_CENSORED))

    if init_rec:
        ia, ir, it, ic = zip(*init_rec)
        init_action = np.array(ia, dtype=int)
        init_recv = np.array(ir, dtype=int)
        init_time = np.array(it, dtype=float)
        init_oncourt = np.array(ic, dtype=bool)
    else:
        init_action = np.zeros(0, dtype=int)
        init_recv = np.zeros(0, dtype=int)
        init_time = np.zeros(0, dtype=float)
        init_oncourt = np.zeros((0, n), dtype=bool)
    if pass_rec:
        ps, pr, pt, pc = zip(*pass_rec)
        pass_send = np.array(ps, dtype=int)
        pass_recv = np.array(pr, dtype=int)
        pass_time = np.array(pt, dtype=float)
        pass_oncourt = np.array(pc, dtype=bool)
    else:
        pass_send = np.zeros(0, dtype=int)
        pass_recv = np.zeros(0, dtype=int)
        pass_time = np.zeros(0, dtype=float)
        pass_oncourt = np.zeros((0, n), dtype=bool)
    if out_rec:
        os_, ok, ot, oc = zip(*out_rec)
        out_send = np.array(os_, dtype=int)
        out_kind = np.array(ok, dtype=int)
        out_time = np.array(ot, dtype=float)
        out_oncourt = np.array(oc, dtype=bool)
    else:
        out_send = np.zeros(0, dtype=int)
        out_kind = np.zeros(0, dtype=int)
        out_time = np.zeros(0, dtype=float)
        out_oncourt = np.zeros((0, n), dtype=bool)
    if poss_rec:
        ph, po, pcl, pco, pe = zip(*poss_rec)
        poss_holder = np.array(ph, dtype=int)
        poss_open = np.array(po, dtype=float)
        poss_close = np.array(pcl, dtype=float)
        poss_oncourt = np.array(pco, dtype=bool)
        poss_end = np.array(pe, dtype=int)
    else:
        poss_holder = np.zeros(0, dtype=int)
        poss_open = np.zeros(0, dtype=float)
        poss_close = np.zeros(0, dtype=float)
        poss_oncourt = np.zeros((0, n), dtype=bool)
        poss_end = np.zeros(0, dtype=int)

    m_init = np.zeros((len(log.initial_actions), n), dtype=int)
    np.add.at(m_init, (init_action, init_recv), 1)
    m_pass = np.zeros((n, n), dtype=int)
    np.add.at(m_pass, (pass_send, pass_recv), 1)
    m_out = np.zeros((n, len(log.outcomes)), dtype=int)
    np.add.at(m_out, (out_send, out_kind), 1)

    return SufficientStats(
        players=log.players, initial_actions=log.initial_actions,
        outcomes=log.outcomes,
        init_action=init_action, init_recv=init_recv, init_time=init_time,
        init_oncourt=init_oncourt,
        pass_send=pass_send, pass_recv=pass_recv, pass_time=pass_time,
        pass_oncourt=pass_oncourt,
        out_send=out_send, out_kind=out_kind, out_time=out_time,
        out_oncourt=out_oncourt,
        poss_holder=poss_holder, poss_open=poss_open, poss_close=poss_close,
        poss_oncourt=poss_oncourt, poss_end=poss_end,
        m_init=m_init, m_pass=m_pass, m_out=m_out,
        truncated_plays=tuple(truncated),
        includes_truncated=include_truncated,
    )


def eligible_count(stats: SufficientStats, labels, ref, cluster: int):
    """Eligible receivers in `cluster` for an event or possession.

    `ref` is a (kind, index) pair with kind one of "init", "pass", "poss".
    For passes and possessions the sender/holder is excluded; for initial
    actions the receiver is included.  Returns (count, per-player indicator).
    """
    hard = np.asarray(getattr(labels, "hard", labels), dtype=int)
    if hard.shape != (stats.n_players,):
        raise ValueError("labels must assign a cluster to every player")
    kind, i = ref
    if kind == "init":
        if not 0 <= i < len(stats.init_action):
            raise IndexError("no such initiation event")
        candidates = stats.init_oncourt[i].copy()
    elif kind == "pass":
        if not 0 <= i < len(stats.pass_send):
            raise IndexError("no such pass event")
        candidates = stats.pass_oncourt[i].copy()
        candidates[stats.pass_send[i]] = False
    elif kind == "poss":
        if not 0 <= i < stats.n_poss:
            raise IndexError("no such possession")
        candidates = stats.poss_oncourt[i].copy()
        candidates[stats.poss_holder[i]] = False
    else:
        raise ValueError(f"unknown reference kind {kind!r}")
    indicator = candidates & (hard == cluster)
    return int(indicator.sum()), indicator.astype(int)
