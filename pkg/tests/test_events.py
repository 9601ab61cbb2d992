import numpy as np
import pytest

from csbm import (InconsistentPlayError, ParseError, ParseOptions,
                  derive_stats, eligible_count, parse_transactions, write_csv)
from csbm.events import END_CENSORED, END_OUTCOME, HEADER

from .conftest import small_instance


def test_sample_parses(sample_log):
    assert len(sample_log.plays) == 2
    assert sample_log.n_events == 9
    assert set(sample_log.players) == {"C5", "C9", "C20", "C30", "C34",
                                       "H3", "H6", "H15", "H21", "H31"}


def test_empty_stream():
    log = parse_transactions("")
    assert len(log.plays) == 0
    assert len(log.players) == 0


def test_time_outside_play_limit():
    text = HEADER + "\ng,p,INBOUND,A,25.0,A|B\n"
    with pytest.raises(ParseError, match="line 2.*time outside play limit"):
        parse_transactions(text)


@pytest.mark.parametrize("row,match", [
    ("g,p,INBOUND,A,1.0", "6 fields"),
    ("g,p,INBOUND,A,abc,A|B", "unparsable time"),
    ("g,p,INBOUND,A,-1,A|B", "play limit"),
    ("g,p,INBOUND,MISS2,3,A|B", "directly to an outcome"),
    ("g,p,MISS2,A,3,A|B", "cannot send"),
    ("g,p,A,REBOUND,3,A|B", "cannot receive"),
    ("g,p,A,A,3,A|B", "sender and receiver"),
    ("g,p,INBOUND,A,3,", "empty oncourt"),
    ("g,p,INBOUND,A,3,A|A|B", "duplicate player"),
    ("g,p,INBOUND,A,3,A|MISS2", "reserved token"),
])
def test_row_level_errors(row, match):
    with pytest.raises(ParseError, match=match):
        parse_transactions(HEADER + "\n" + row + "\n")


def test_known_player_off_court_is_hard_error():
    text = (HEADER + "\n"
            "g,p1,INBOUND,A,0,A|B\n"
            "g,p1,A,B,4,A|C\n")       # B known (row 1) but not on court here
    with pytest.raises(ParseError, match="line 3.*'B' not in oncourt"):
        parse_transactions(text)


def test_unknown_token_rejected_or_skipped():
    text = (HEADER + "\n"
            "g,p1,INBOUND,A,0,A|B\n"
            "g,p1,A,MISS2,4,A|B\n"
            "g,p2,JUMPBALL,A,0,A|B\n"
            "g,p2,A,MISS2,4,A|B\n")
    with pytest.raises(ParseError, match="unknown token 'JUMPBALL'"):
        parse_transactions(text)
    log = parse_transactions(text, ParseOptions(skip_unknown=True))
    assert len(log.plays) == 1  # the enclosing play is dropped
    assert log.plays[0].play_id == "p1"


def test_out_of_order_times():
    text = (HEADER + "\n"
            "g,p,INBOUND,A,5,A|B\n"
            "g,p,A,B,3,A|B\n")
    with pytest.raises(ParseError, match="out of order"):
        parse_transactions(text)


def test_play_id_reuse_rejected():
    text = (HEADER + "\n"
            "g,p1,INBOUND,A,0,A|B\n"
            "g,p2,INBOUND,B,0,A|B\n"
            "g,p1,INBOUND,A,0,A|B\n")
    with pytest.raises(ParseError, match="reused"):
        parse_transactions(text)


def test_missing_header():
    with pytest.raises(ParseError, match="expected header"):
        parse_transactions("a,b,c,d,e,f\n")


def test_comments_and_blank_lines():
    text = ("# a comment\n\n" + HEADER + "\n"
            "# another\n"
            "g,p,INBOUND,A,0,A|B\n\n"
            "g,p,A,MISS2,4,A|B\n")
    log = parse_transactions(text)
    assert log.n_events == 2


def test_round_trip_identity(sample_log):
    assert parse_transactions(write_csv(sample_log)) == sample_log


def test_round_trip_identity_simulated():
    log, _, _, _ = small_instance(seed=11, n_plays=40)
    assert parse_transactions(write_csv(log)) == log


def test_derive_stats_sample_play1(sample_stats):
    idx = {p: i for i, p in enumerate(sample_stats.players)}
    s_idx = {s: i for i, s in enumerate(sample_stats.initial_actions)}
    a_idx = {a: i for i, a in enumerate(sample_stats.outcomes)}
    # C9 holds (0, 11], C5 holds (11, 12]
    c9 = [h for h in range(sample_stats.n_poss)
          if sample_stats.poss_holder[h] == idx["C9"]]
    assert len(c9) == 1
    assert (sample_stats.poss_open[c9[0]],
            sample_stats.poss_close[c9[0]]) == (0.0, 11.0)
    c5 = [h for h in range(sample_stats.n_poss)
          if sample_stats.poss_holder[h] == idx["C5"]]
    assert (sample_stats.poss_open[c5[0]],
            sample_stats.poss_close[c5[0]]) == (11.0, 12.0)
    assert sample_stats.m_init[s_idx["INBOUND"], idx["C9"]] == 1
    assert sample_stats.m_pass[idx["C9"], idx["C5"]] == 1
    assert sample_stats.m_out[idx["C5"], a_idx["MISS2"]] == 1


def test_derive_stats_sample_play2(sample_stats):
    idx = {p: i for i, p in enumerate(sample_stats.players)}
    h3 = [h for h in range(sample_stats.n_poss)
          if sample_stats.poss_holder[h] == idx["H3"]]
    ivals = sorted((sample_stats.poss_open[h], sample_stats.poss_close[h])
                   for h in h3)
    assert ivals == [(7.0, 8.0), (9.0, 12.0)]


def test_count_identities(sample_stats):
    stats = sample_stats
    # every possession ends in exactly one pass or one outcome
    releases = stats.m_pass.sum(axis=1) + stats.m_out.sum(axis=1)
    assert np.array_equal(releases, stats.possessions_per_player)
    # endpoint counts add up to the number of parsed events
    assert (stats.m_init.sum() + stats.m_pass.sum() + stats.m_out.sum()
            == stats.n_events)


def test_truncated_play_flagged_and_excluded():
    text = (HEADER + "\n"
            "g,p1,INBOUND,A,0,A|B\n")
    log = parse_transactions(text)
    assert log.plays[0].truncated
    stats = derive_stats(log)
    assert stats.n_poss == 0 and stats.m_init.sum() == 0
    assert stats.truncated_plays == (0,)
    stats = derive_stats(log, include_truncated=True)
    # the dangling possession closes at the last observed event time
    assert stats.n_poss == 1
    assert stats.poss_open[0] == stats.poss_close[0] == 0.0
    assert stats.poss_end[0] == END_CENSORED
    assert stats.m_init.sum() == 1


def test_mid_play_inbound_resumption():
    text = (HEADER + "\n"
            "g,p,INBOUND,A,0,A|B\n"
            "g,p,A,FOULED,5,A|B\n"
            "g,p,INBOUND,B,7,A|B\n"
            "g,p,B,MAKE2,9,A|B\n")
    stats = derive_stats(parse_transactions(text))
    assert stats.m_init.sum() == 2      # both inbounds count as initiations
    assert stats.n_poss == 2
    assert list(stats.poss_end) == [END_OUTCOME, END_OUTCOME]


def test_mid_play_stoppage_censors_previous_possession():
    # an inbound while a player still holds the ball closes that possession
    # as censored at the stoppage time
    text = (HEADER + "\n"
            "g,p,INBOUND,A,0,A|B\n"
            "g,p,INBOUND,B,6,A|B\n"
            "g,p,B,MAKE2,9,A|B\n")
    stats = derive_stats(parse_transactions(text))
    assert stats.n_poss == 2
    assert stats.poss_end[0] == END_CENSORED
    assert (stats.poss_open[0], stats.poss_close[0]) == (0.0, 6.0)


def test_inconsistent_chain():
    text = (HEADER + "\n"
            "g,p,INBOUND,A,0,A|B|C\n"
            "g,p,B,C,4,A|B|C\n"     # B never received the ball
            "g,p,C,MISS2,6,A|B|C\n")
    log = parse_transactions(text)
    with pytest.raises(InconsistentPlayError):
        derive_stats(log)


def test_pass_after_outcome_rejected():
    text = (HEADER + "\n"
            "g,p,INBOUND,A,0,A|B\n"
            "g,p,A,MISS2,4,A|B\n"
            "g,p,A,B,6,A|B\n"
            "g,p,B,MISS2,8,A|B\n")
    with pytest.raises(InconsistentPlayError):
        derive_stats(parse_transactions(text))


def test_zero_length_possession_allowed():
    text = (HEADER + "\n"
            "g,p,INBOUND,A,3,A|B\n"
            "g,p,A,B,3,A|B\n"
            "g,p,B,TO,3,A|B\n")
    stats = derive_stats(parse_transactions(text))
    assert stats.n_poss == 2
    assert np.all(stats.poss_close - stats.poss_open == 0.0)


def test_eligible_count_examples(sample_stats):
    stats = sample_stats
    idx = {p: i for i, p in enumerate(stats.players)}
    ones = np.zeros(stats.n_players, dtype=int)
    # pass C9 -> C5 at t=11, all labeled cluster 0: sender excluded
    pass_ref = ("pass", int(np.flatnonzero(
        stats.pass_send == idx["C9"])[0]))
    g, ind = eligible_count(stats, ones, pass_ref, 0)
    assert g == 4
    assert ind[idx["C9"]] == 0
    # C5 alone in cluster 1, rest cluster 0
    labels = ones.copy()
    labels[idx["C5"]] = 1
    g1, _ = eligible_count(stats, labels, pass_ref, 1)
    g0, _ = eligible_count(stats, labels, pass_ref, 0)
    assert (g1, g0) == (1, 3)
    # initial action includes the receiver
    g, ind = eligible_count(stats, ones, ("init", 0), 0)
    assert g == 4
    assert ind[idx["C9"]] == 1


def test_eligible_count_totals_property(sample_stats):
    stats = sample_stats
    rng = np.random.default_rng(5)
    for _ in range(10):
        labels = rng.integers(0, 3, stats.n_players)
        for e in range(len(stats.pass_send)):
            total = sum(eligible_count(stats, labels, ("pass", e), c)[0]
                        for c in range(3))
            assert total == stats.pass_oncourt[e].sum() - 1
        for e in range(len(stats.init_action)):
            total = sum(eligible_count(stats, labels, ("init", e), c)[0]
                        for c in range(3))
            assert total == stats.init_oncourt[e].sum()


def test_eligible_count_bad_ref(sample_stats):
    with pytest.raises(IndexError):
        eligible_count(sample_stats, np.zeros(10, dtype=int), ("pass", 99), 0)
    with pytest.raises(ValueError):
        eligible_count(sample_stats, np.zeros(10, dtype=int), ("foo", 0), 0)


def test_oncourt_constant_over_possessions(sample_stats):
    # one membership row per interval by construction; rows are boolean and
    # always include the holder
    stats = sample_stats
    held = stats.poss_oncourt[np.arange(stats.n_poss), stats.poss_holder]
    assert held.all()
