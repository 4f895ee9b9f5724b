"""BER of CD-D-OAMP (C = 1, 64) and LMMSE at N = 1024 QPSK (an hour or more on one core)."""

import argparse
import time

from _out import save
from wideband_afdm.experiments import fig12_curves, snr_at_ber

ap = argparse.ArgumentParser()
ap.add_argument("--snr", type=float, nargs="+", default=[8, 9, 10, 11, 12, 13, 14, 15, 16])
ap.add_argument("--min-errors", type=int, default=100)
ap.add_argument("--max-trials", type=int, default=300)
ap.add_argument("--seed", type=int, default=12)
ap.add_argument("--out", default="results/fig12.csv")
args = ap.parse_args()

t0 = time.time()
curves = fig12_curves(snr_db=tuple(args.snr), min_errors=args.min_errors, max_trials=args.max_trials, seed=args.seed,
                      progress=lambda si, d: print(f"{args.snr[si]} dB {d} {time.time() - t0:.0f}s", flush=True))
rows = []
for name, c in curves.items():
    for i, s in enumerate(c.snr_db):
        rows.append([name, s, int(c.errors[i]), int(c.bits[i]), repr(float(c.ber[i])), int(c.trials[i])])
    print(f"{name}: SNR at BER 1e-3 = {snr_at_ber(c.snr_db, c.ber, 1e-3):.2f} dB")
save(args.out, ["detector", "snr_db", "bit_errors", "bits", "ber", "trials"], rows, [f"seed: {args.seed}"])
