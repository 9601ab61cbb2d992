"""Build a two-cluster model, simulate a log, and write spec + CSV files.

The simulation spec doubles as the truth sidecar for recovery benchmarks:
`csbm fit --truth` reads the same JSON to score the fitted labels.
"""
import pathlib
import tempfile

import numpy as np

import csbm
from csbm import ClusterParams, SimSpec

basis = csbm.SplineBasis.uniform(8)
players = tuple(f"P{i:02d}" for i in range(8))
labels = np.array([0, 0, 0, 0, 1, 1, 1, 1])

params = ClusterParams(
    k=2,
    pi=np.array([0.5, 0.5]),
    # inbounds mostly to cluster 1, rebounds mostly to cluster 2
    p_init=np.array([[0.85, 0.15], [0.25, 0.75], [0.5, 0.5]]),
    basis=basis,
    # cluster 1 holds the ball longer early; both speed up late
    lam_coeffs=np.log([[0.25, 0.25, 0.3, 0.35, 0.4, 0.6, 1.2, 3.0],
                       [0.6, 0.8, 0.7, 0.55, 0.5, 0.8, 1.5, 3.0]]),
    trans=np.array([  # columns: to C1, to C2, then the six outcomes
        [0.10, 0.55, 0.10, 0.08, 0.05, 0.06, 0.03, 0.03],
        [0.45, 0.15, 0.12, 0.10, 0.05, 0.07, 0.03, 0.03]]))
params.validate()

spec = SimSpec(params=params, players=players, labels=labels,
               lineups=(players[:3] + players[4:6],
                        players[1:4] + players[6:8]),
               initial_mix=np.array([0.5, 0.35, 0.15]),
               n_plays=200)

log = csbm.simulate_log(spec, rng=np.random.default_rng(7))
stats = csbm.derive_stats(log)
print(f"simulated {len(log.plays)} plays, {log.n_events} events, "
      f"{len(stats.truncated_plays)} truncated at the clock")
print(f"mean play length: "
      f"{np.mean([p.events[-1].time for p in log.plays]):.1f}s")

out = pathlib.Path(tempfile.mkdtemp(prefix="csbm_demo_"))
csbm.save_log(log, out / "log.csv")
csbm.save_spec(spec, out / "truth.json", seed=7)
print(f"\nwrote {out / 'log.csv'} and {out / 'truth.json'}")
print("fit it back with:")
print(f"  csbm fit --input {out / 'log.csv'} --k 2 --seed 1 "
      f"--out-dir {out / 'fit'} --truth {out / 'truth.json'}")
