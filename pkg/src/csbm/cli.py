"""Command-line front end: fit, simulate, bands, report.

Exit codes: 0 on success, 2 on input/validation errors, 3 when a fit is
infeasible.  Every output file is written atomically (temp file then rename)
and all outputs are byte-deterministic given the seed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np
from sklearn.metrics import adjusted_rand_score

from . import __version__
from .events import (INITIAL_ACTIONS, OUTCOMES, ParseError, ParseOptions,
                     derive_stats, load_log, write_csv)
from .generator import (NoEligibleReceiverError, load_spec, simulate_log,
                        spec_to_dict)
from .inference import (FitConfig, FitInfeasibleError, document_to_fit,
                        fit_csbm, fit_to_document)
from .likelihood import MODE_GENERAL, MODE_SIMPLIFIED, params_from_dict
from .uncertainty import bands_csv, observed_info, rate_bands

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _threads_default() -> int:
    env = os.environ.get("CSBM_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _labels_csv(players, labels) -> str:
    lines = ["player,cluster"]
    for p, c in zip(players, labels):
        lines.append(f"{p},{c}")
    return "\n".join(lines) + "\n"


def _p_init_csv(actions, p_init) -> str:
    k = p_init.shape[1]
    lines = ["action," + ",".join(f"C{c + 1}" for c in range(k))]
    for s, row in zip(actions, p_init):
        lines.append(s + "," + ",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def _transition_table(params) -> np.ndarray:
    """Row-stochastic destination table; in general mode the rows are the
    time-averaged shares of each destination's integrated rate."""
    if params.mode == MODE_SIMPLIFIED:
        return params.trans.copy()
    span = params.basis.span_integrals(params.basis.t_min,
                                       params.basis.t_max)[0]
    rho = np.exp(params.rho_coeffs) @ span
    eta = np.exp(params.eta_coeffs) @ span
    table = np.concatenate([rho, eta], axis=1)
    return table / table.sum(axis=1, keepdims=True)


def _trans_csv(params) -> str:
    k = params.k
    table = _transition_table(params)
    header = ("cluster," + ",".join(f"C{c + 1}" for c in range(k))
              + "," + ",".join(OUTCOMES))
    lines = [header]
    for c, row in enumerate(table):
        lines.append(f"C{c + 1}," + ",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def _truth_ari(truth_path, players, hard_labels) -> float | None:
    spec = load_spec(truth_path)
    truth_of = spec.label_of
    pairs = [(truth_of[p], c) for p, c in zip(players, hard_labels)
             if p in truth_of]
    if not pairs:
        return None
    truth, fitted = zip(*pairs)
    return float(adjusted_rand_score(truth, fitted))


def _format_report(doc: dict, ari: float | None = None) -> str:
    params_d = doc["params"]
    k = params_d["k"]
    lines = [f"csbm fit report (version {doc['version']})",
             f"mode: {params_d['mode']}  clusters: {k}  "
             f"players: {len(doc['players'])}",
             f"loglik: {doc['loglik']:.6f}",
             ""]
    if ari is not None:
        lines.insert(3, f"adjusted Rand index vs truth: {ari:.4f}")
    lines.append("cluster labels")
    for p, c in zip(doc["players"], doc["labels"]):
        lines.append(f"  {p:<12} C{c}")
    lines.append("")
    lines.append("cluster marginals (pi)")
    lines.append("  " + "  ".join(f"C{c + 1}={v:.4f}"
                                  for c, v in enumerate(params_d["pi"])))
    lines.append("")
    lines.append("initial-action probabilities (rows sum to 1)")
    header = "  {:<10}".format("") + "".join(f"{'C' + str(c + 1):>9}"
                                             for c in range(k))
    lines.append(header)
    for s, row in zip(INITIAL_ACTIONS, params_d["p_init"]):
        lines.append("  {:<10}".format(s)
                     + "".join(f"{v:>9.4f}" for v in row))
    lines.append("")
    table = _transition_table(params_from_dict(params_d))
    lines.append("transition probabilities (originating cluster rows)")
    cols = [f"C{c + 1}" for c in range(k)] + list(OUTCOMES)
    lines.append("  {:<6}".format("") + "".join(f"{c:>9}" for c in cols))
    for c, row in enumerate(table):
        lines.append("  {:<6}".format(f"C{c + 1}")
                     + "".join(f"{v:>9.4f}" for v in row))
    lines.append("")
    return "\n".join(lines)


def _cmd_fit(args) -> int:
    try:
        log = load_log(args.input,
                       ParseOptions(skip_unknown=args.skip_unknown))
        config = FitConfig(k=args.k, mode=args.mode, nbasis=args.nbasis,
                           degree=args.degree, n_restarts=args.restarts,
                           gibbs_burnin=args.gibbs_burnin,
                           gibbs_samples=args.gibbs_samples,
                           em_max_iters=args.em_iters,
                           plus_max_steps=args.plus_steps,
                           seed=args.seed, threads=args.threads,
                           include_truncated=args.include_truncated)
        config.validate()
    except (ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        fit = fit_csbm(log, config)
    except FitInfeasibleError as exc:
        print(f"fit infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    stats = derive_stats(log, include_truncated=config.include_truncated)
    doc = fit_to_document(fit, config, log.players, __version__)
    ari = None
    if args.truth:
        try:
            ari = _truth_ari(args.truth, log.players, doc["labels"])
        except (ValueError, OSError, KeyError) as exc:
            print(f"error reading truth sidecar: {exc}", file=sys.stderr)
            return EXIT_INPUT
        if ari is not None:
            doc["ari_vs_truth"] = ari

    info = observed_info(stats, fit.labels, fit.params)
    grid = np.arange(0.0, fit.params.basis.t_max + args.grid_step / 2,
                     args.grid_step)
    bands = rate_bands(fit.params, info, grid, args.level, OUTCOMES)

    out = args.out_dir
    _atomic_write(os.path.join(out, "fit.json"),
                  json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _atomic_write(os.path.join(out, "labels.csv"),
                  _labels_csv(doc["players"], doc["labels"]))
    _atomic_write(os.path.join(out, "initial_probs.csv"),
                  _p_init_csv(log.initial_actions,
                              np.asarray(doc["params"]["p_init"])))
    _atomic_write(os.path.join(out, "transitions.csv"),
                  _trans_csv(fit.params))
    _atomic_write(os.path.join(out, "rates.csv"), bands_csv(bands))
    _atomic_write(os.path.join(out, "report.txt"), _format_report(doc, ari))
    print(f"fit written to {out} (loglik {fit.loglik:.4f})")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    try:
        spec = load_spec(args.spec)
        if args.n_plays is not None:
            spec.n_plays = args.n_plays
        spec.validate()
    except (ValueError, KeyError, OSError) as exc:
        print(f"invalid simulation spec: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rng = np.random.default_rng(args.seed)
    try:
        log = simulate_log(spec, rng=rng)
    except NoEligibleReceiverError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _atomic_write(args.out, write_csv(log))
    if args.truth_out:
        _atomic_write(args.truth_out,
                      json.dumps(spec_to_dict(spec, args.seed), indent=2,
                                 sort_keys=True) + "\n")
    print(f"{len(log.plays)} plays written to {args.out}")
    return EXIT_OK


def _cmd_bands(args) -> int:
    try:
        with open(args.fit, "r", encoding="utf-8") as fh:
            fit, config, _players = document_to_fit(json.load(fh))
        log = load_log(args.input)
        stats = derive_stats(log,
                             include_truncated=config.include_truncated)
    except (ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    info = observed_info(stats, fit.labels, fit.params)
    grid = np.arange(0.0, fit.params.basis.t_max + args.grid_step / 2,
                     args.grid_step)
    bands = rate_bands(fit.params, info, grid, args.level, OUTCOMES)
    _atomic_write(args.out, bands_csv(bands))
    print(f"bands written to {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        with open(args.fit, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("format") != "csbm-fit/1":
            raise ValueError("not a fit document")
        ari = None
        if args.truth:
            ari = _truth_ari(args.truth, doc["players"], doc["labels"])
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = _format_report(doc, ari)
    if args.out:
        _atomic_write(args.out, text)
    else:
        print(text, end="")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csbm",
        description="Cluster transactional event networks with a "
                    "continuous-time block model.")
    parser.add_argument("--version", action="version",
                        version=f"csbm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit the model to a transaction log")
    fit.add_argument("--input", required=True, help="transaction CSV")
    fit.add_argument("--k", required=True, type=int, help="cluster count")
    fit.add_argument("--seed", required=True, type=int,
                     help="rng seed (mandatory for reproducibility)")
    fit.add_argument("--out-dir", default=".", help="output directory")
    fit.add_argument("--restarts", type=int, default=10)
    fit.add_argument("--mode", choices=[MODE_SIMPLIFIED, MODE_GENERAL],
                     default=MODE_SIMPLIFIED)
    fit.add_argument("--nbasis", type=int, default=8)
    fit.add_argument("--degree", type=int, default=3)
    fit.add_argument("--gibbs-burnin", type=int, default=10)
    fit.add_argument("--gibbs-samples", type=int, default=40)
    fit.add_argument("--em-iters", type=int, default=25)
    fit.add_argument("--plus-steps", type=int, default=50)
    fit.add_argument("--threads", type=int, default=_threads_default())
    fit.add_argument("--truth", help="truth sidecar for ARI scoring")
    fit.add_argument("--skip-unknown", action="store_true",
                     help="drop plays containing unknown tokens")
    fit.add_argument("--include-truncated", action="store_true",
                     help="keep plays without an absorbing outcome")
    fit.add_argument("--grid-step", type=float, default=0.1)
    fit.add_argument("--level", type=float, default=0.95)
    fit.set_defaults(func=_cmd_fit)

    sim = sub.add_parser("simulate", help="simulate a transaction log")
    sim.add_argument("--spec", required=True, help="simulation spec JSON")
    sim.add_argument("--seed", required=True, type=int)
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--truth-out", help="truth sidecar path")
    sim.add_argument("--n-plays", type=int, help="override spec n_plays")
    sim.set_defaults(func=_cmd_simulate)

    bands = sub.add_parser("bands", help="confidence bands for a fit")
    bands.add_argument("--fit", required=True, help="fit.json document")
    bands.add_argument("--input", required=True, help="transaction CSV")
    bands.add_argument("--out", required=True, help="band CSV path")
    bands.add_argument("--grid-step", type=float, default=0.1)
    bands.add_argument("--level", type=float, default=0.95)
    bands.set_defaults(func=_cmd_bands)

    rep = sub.add_parser("report", help="human-readable fit report")
    rep.add_argument("--fit", required=True, help="fit.json document")
    rep.add_argument("--truth", help="truth sidecar for ARI scoring")
    rep.add_argument("--out", help="write to file instead of stdout")
    rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
