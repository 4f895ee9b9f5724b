"""Shared CSV writer for the figure scripts."""

import csv
import io
import sys
from pathlib import Path

from wideband_afdm import __version__
from wideband_afdm.harness import write_atomic


def save(path, header, rows, meta=()):
    buf = io.StringIO()
    buf.write(f"# wideband_afdm {__version__}\n")
    buf.write(f"# argv: {' '.join(sys.argv)}\n")
    for m in meta:
        buf.write(f"# {m}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    write_atomic(path, buf.getvalue())
    print(f"wrote {Path(path)}")
