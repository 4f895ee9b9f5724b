"""Measured D-LMMSE multiply-accumulates vs the C N_c^3 + C N_c^2 |D_c| model at N = 1024."""

import argparse

from _out import save
from wideband_afdm.experiments import table1_macs

ap = argparse.ArgumentParser()
ap.add_argument("--C", type=int, nargs="+", default=[1, 4, 16, 64])
ap.add_argument("--seed", type=int, default=10)
ap.add_argument("--out", default="results/table1.csv")
args = ap.parse_args()

r = table1_macs(Cs=tuple(args.C), seed=args.seed)
rows = []
for C, m, mod, tot, sz in zip(r.Cs, r.measured, r.model, r.per_iteration_total, r.D_sizes):
    rows.append([C, repr(float(m)), repr(float(mod)), repr(float(m / mod)), repr(float(tot)), int(max(sz))])
    print(f"C={C:3d}  dlmmse={m:.3e}  model={mod:.3e}  ratio={m / mod:.3f}  total/iter={tot:.3e}  max|D_c|={max(sz)}")
save(args.out, ["C", "dlmmse_macs", "model", "ratio", "total_macs_per_iteration", "max_Dc"], rows,
     [f"seed: {args.seed}"])
