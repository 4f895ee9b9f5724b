"""SE prediction vs empirical MSE of CD-D-OAMP at N = 1024 (about an hour on one core)."""

import argparse
import time

from _out import save
from wideband_afdm.experiments import fig8_state_evolution

ap = argparse.ArgumentParser()
ap.add_argument("--trials", type=int, default=200)
ap.add_argument("--se-channels", type=int, default=None, help="channels averaged in the SE prediction (default: all)")
ap.add_argument("--seed", type=int, default=8)
ap.add_argument("--out", default="results/fig8.csv")
args = ap.parse_args()

t0 = time.time()
r = fig8_state_evolution(n_trials=args.trials, n_se=args.se_channels, seed=args.seed,
                         progress=lambda t: print(f"trial {t + 1}/{args.trials}  {time.time() - t0:.0f}s", flush=True))
rows = []
for (s, C), emp in sorted(r.empirical.items()):
    pred = r.predicted[(s, C)]
    for it, (e, p) in enumerate(zip(emp, pred), 1):
        rows.append([s, C, it, repr(float(p)), repr(float(e))])
        print(f"SNR {s:4.1f} C={C:2d} it={it:2d}  predicted={p:.3e}  empirical={e:.3e}  rel={abs(p - e) / e:.2f}")
save(args.out, ["snr_db", "C", "iteration", "predicted", "empirical"], rows,
     [f"seed: {args.seed}", f"trials: {r.n_trials}", f"se_channels: {r.n_se}"])
