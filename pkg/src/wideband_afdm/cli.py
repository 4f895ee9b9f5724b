"""Command-line entry point: ``wafdm <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ChannelConfigError, sample_channel, time_domain_channel_matrix
from .chirp_opt import InfeasibleDesignError, admissible_N
from .harness import (
    THREADS_ENV,
    ConfigError,
    config_error_line,
    default_threads,
    load_config,
    run_ber_sweep,
    snr_to_n0,
    write_atomic,
)

EXIT_CONFIG = 3  # argparse already exits with 2 on usage errors


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="TOML config file")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. --set detector.C=16 (repeatable)")
    g.add_argument("--seed", type=int, help="master seed (overrides config)")
    g.add_argument("--out", help="output CSV path (default: stdout)")
    g.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    return p


def _parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="wafdm", description="Wideband AFDM simulation tools.")
    ap.add_argument("--version", action="version", version=f"wafdm {__version__}")
    sub = ap.add_subparsers(dest="cmd", metavar="COMMAND")
    sub.required = True

    oc = sub.add_parser("optimize-chirp", parents=[common], help="chirp c1 and admissible N window")
    oc.add_argument("--N", type=int, help="symbols per frame")
    oc.add_argument("--bandwidth", type=float, help="bandwidth B in Hz (sets delta_f = B/N)")
    oc.add_argument("--f-c", type=float, help="carrier frequency in Hz")
    oc.add_argument("--tau-max", type=float, help="maximum delay in s")
    oc.add_argument("--alpha-max", type=float, help="maximum Doppler scale factor")
    oc.add_argument("--nv", type=int, help="support guard N_v")

    sub.add_parser("sim-ber", parents=[common], help="Monte Carlo BER sweep")

    pb = sub.add_parser("pep-bound", parents=[common], help="union bound over the SNR grid for a seeded path geometry")
    pb.add_argument("--mode", choices=("auto", "exact", "sampled", "uniform"), default="auto")
    pb.add_argument("--pairs", type=int, default=20_000, help="pairs drawn in sampled/uniform mode")

    se = sub.add_parser("state-evolution", parents=[common], help="SE prediction (and optional empirical MSE)")
    se.add_argument("--empirical", type=int, default=0, metavar="TRIALS",
                    help="also average the detector MSE over this many trials on the same channel")

    cd = sub.add_parser("channel-dump", parents=[common], help="draw a channel and dump one DAF row with supports")
    cd.add_argument("--row", type=int, default=0, help="row p of the DAF-domain channel")
    return ap


def _emit(text: str, out: str | None):
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _csv(header, rows, meta: list[str]) -> str:
    buf = io.StringIO()
    for m in meta:
        buf.write(f"# {m}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _meta(cfg, *extra: str) -> list[str]:
    return [f"wideband_afdm {__version__}", f"seed: {cfg.seed}",
            f"config: {json.dumps(cfg.to_dict(), sort_keys=True)}", *extra]


def _load(args, extra: list[str] | None = None):
    overrides = list(extra or []) + list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(args.config, overrides)


def _cmd_optimize(args) -> int:
    extra = []
    if args.N is not None:
        extra.append(f"system.N={args.N}")
    if args.f_c is not None:
        extra.append(f"system.f_c={args.f_c!r}")
    if args.tau_max is not None:
        extra.append(f"spread.tau_max={args.tau_max!r}")
    if args.alpha_max is not None:
        extra.append(f"spread.alpha_max={args.alpha_max!r}")
    if args.nv is not None:
        extra.append(f"chirp.N_v={args.nv}")
    cfg = _load(args, extra)
    if args.bandwidth is not None:
        cfg.system.delta_f = args.bandwidth / cfg.system.N
    spread = cfg.channel_spread()
    rep = admissible_N(spread, cfg.chirp.N_v, cfg.system.N)
    rows = [("N", cfg.system.N), ("delta_f", cfg.system.delta_f), ("ell_max", spread.ell_max),
            ("k_max", spread.k_max)] + rep.as_rows()
    if args.out:
        write_atomic(args.out, _csv(["key", "value"], rows, _meta(cfg)))
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    return 0


def _cmd_sim(args) -> int:
    cfg = _load(args)
    threads = args.threads if args.threads is not None else default_threads()
    curve = run_ber_sweep(cfg, threads=threads, out=args.out)
    if not args.out:
        sys.stdout.write(curve.to_csv())
    return 0


def _geometry(cfg):
    system, spread = cfg.system_config(), cfg.channel_spread()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0xC0FFEE,)))
    channel = sample_channel(spread, cfg.spread.P, rng, system, cfg.spread.gain_profile, cfg.spread.distinct_delays)
    return system, spread, channel


def _cmd_pep(args) -> int:
    from .analysis import ber_union_bound
    from .sparsity import daf_path_matrices

    cfg = _load(args)
    system, _, channel = _geometry(cfg)
    chirp = cfg.chirp_params()
    Hs = daf_path_matrices(channel, system, chirp)
    N0s = [snr_to_n0(s) for s in cfg.snr_db]
    ub = ber_union_bound(Hs, system.alphabet, N0s, mode=args.mode, n_pairs=args.pairs, seed=cfg.seed)
    rows = [(repr(float(s)), repr(float(n0)), repr(float(b)), repr(float(c))) for s, n0, b, c in zip(cfg.snr_db, N0s, ub.bound, ub.ci_halfwidth)]
    meta = _meta(cfg, f"mode: {ub.mode}", f"pairs: {ub.n_pairs}",
                 "paths: " + "; ".join(f"ell={p.ell} alpha={p.alpha!r}" for p in channel.paths))
    _emit(_csv(["snr_db", "N0", "bound", "ci_halfwidth"], rows, meta), args.out)
    return 0


def _cmd_se(args) -> int:
    from .analysis import state_evolution
    from .daf_core import daf_matrix
    from .detectors import cd_d_oamp_detect, partition_groups

    cfg = _load(args)
    system, _, channel = _geometry(cfg)
    chirp = cfg.chirp_params()
    U = daf_matrix(system, chirp)
    H_T = time_domain_channel_matrix(channel, system, chirp)
    part = partition_groups(H_T, cfg.detector.C, cfg.detector.energy_threshold)
    alphabet = system.alphabet
    rows = []
    for si, s in enumerate(cfg.snr_db):
        N0 = snr_to_n0(s)
        se = state_evolution(part, N0, alphabet, n_t=cfg.detector.n_t, seed=cfg.seed)
        emp = np.zeros(cfg.detector.n_t)
        for t in range(args.empirical):
            rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(si, t)))
            x = alphabet.points[rng.integers(0, alphabet.size, system.N)]
            noise = np.sqrt(N0 / 2) * (rng.standard_normal(system.N) + 1j * rng.standard_normal(system.N))
            res = cd_d_oamp_detect(H_T @ U.inverse(x) + noise, H_T, U, N0, alphabet, partition=part,
                                   n_t=cfg.detector.n_t, rho=cfg.detector.rho, x_true=x, early_stop=False)
            emp += np.array([r.mse for r in res.trace]) / args.empirical
        for it in range(cfg.detector.n_t):
            rows.append((repr(float(s)), it + 1, repr(float(se.eta_D_p[it])), repr(float(emp[it])) if args.empirical else ""))
    meta = _meta(cfg, f"empirical_trials: {args.empirical}")
    _emit(_csv(["snr_db", "iteration", "predicted", "empirical"], rows, meta), args.out)
    return 0


def _cmd_dump(args) -> int:
    from .sparsity import daf_domain_channel, export_support_csv

    cfg = _load(args)
    system, _, channel = _geometry(cfg)
    chirp = cfg.chirp_params()
    if not 0 <= args.row < system.N:
        raise ConfigError(f"--row must lie in [0, {system.N})")
    rows = [(i, repr(p.h.real), repr(p.h.imag), p.ell, repr(p.alpha), repr(p.k)) for i, p in enumerate(channel.paths)]
    meta = _meta(cfg, f"c1: {chirp.c1!r}", f"c2: {chirp.c2!r}", f"L_cpp: {channel.L_cpp}", f"L_cps: {channel.L_cps}")
    text = _csv(["path", "h_re", "h_im", "ell", "alpha", "k"], rows, meta)
    if not args.out:
        sys.stdout.write(text)
        return 0
    out = Path(args.out)
    write_atomic(out, text)
    # |H_T| grid and one DAF-domain row with the per-path supports
    mag = np.abs(time_domain_channel_matrix(channel, system, chirp))
    grid = _csv([f"n{j}" for j in range(system.N)], [[f"{v:.9e}" for v in r] for r in mag], meta)
    write_atomic(out.with_name(out.stem + "_HT_mag.csv"), grid)
    H_bar = daf_domain_channel(channel, system, chirp)
    export_support_csv(out.with_name(out.stem + f"_row{args.row}.csv"), channel, args.row, system, chirp,
                       N_v=cfg.chirp.N_v, H_bar=H_bar)
    return 0


COMMANDS = {
    "optimize-chirp": _cmd_optimize,
    "sim-ber": _cmd_sim,
    "pep-bound": _cmd_pep,
    "state-evolution": _cmd_se,
    "channel-dump": _cmd_dump,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except (ConfigError, InfeasibleDesignError, ChannelConfigError) as e:
        print(config_error_line(e), file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - one-line report for any failure
        print(config_error_line(e), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
