"""Chirp design for the 6 kHz underwater link (B = 4 kHz, N = 1024, tau_max = 20 ms)."""

import sys

from wideband_afdm.cli import main

argv = ["optimize-chirp", "--N", "1024", "--bandwidth", "4000", "--tau-max", "0.02", "--alpha-max", "1e-4",
        "--f-c", "6000"]
sys.exit(main(argv + sys.argv[1:]))
