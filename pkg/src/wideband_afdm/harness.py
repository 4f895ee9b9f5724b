"""Configuration, seeded Monte Carlo BER sweeps and CSV persistence."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .channel import ChannelSpread, apply_channel, sample_channel, time_domain_channel_matrix, transmit
from .chirp_opt import narrowband_c1, optimize_c1
from .daf_core import DEFAULT_C2, ChirpParams, SystemConfig, daf_matrix
from .detectors import cd_d_oamp_detect, d_oamp_detect, lmmse_detect, ml_detect

STAT_FLOOR = 100
THREADS_ENV = "WAFDM_THREADS"
DETECTORS = ("cd_d_oamp", "d_oamp", "oamp", "lmmse", "ml")


class ConfigError(ValueError):
    pass


class TrialError(RuntimeError):
    pass


@dataclass
class SystemSection:
    N: int = 64
    delta_f: float = 4.0
    f_c: float = 6000.0
    alphabet: str = "qpsk"


@dataclass
class SpreadSection:
    tau_max: float = 5e-3
    alpha_max: float = 1e-4
    P: int = 4
    gain_profile: str = "uniform"
    distinct_delays: bool = True


@dataclass
class ChirpSection:
    policy: str = "optimized"
    N_v: int = 2
    c1: float | None = None
    c2: float = DEFAULT_C2


@dataclass
class DetectorSection:
    name: str = "cd_d_oamp"
    C: int = 1
    n_t: int = 15
    rho: float = 0.01
    energy_threshold: float = 1e-6


@dataclass
class TrialsSection:
    min_trials: int = 10
    min_bit_errors: int = 100
    max_trials: int = 1000
    batch: int = 8


@dataclass
class SimConfig:
    system: SystemSection = field(default_factory=SystemSection)
    spread: SpreadSection = field(default_factory=SpreadSection)
    chirp: ChirpSection = field(default_factory=ChirpSection)
    detector: DetectorSection = field(default_factory=DetectorSection)
    trials: TrialsSection = field(default_factory=TrialsSection)
    snr_db: list = field(default_factory=lambda: [0.0, 4.0, 8.0, 12.0])
    seed: int = 0

    def validate(self) -> "SimConfig":
        s, sp, ch, d, t = self.system, self.spread, self.chirp, self.detector, self.trials
        checks = [
            (s.N >= 1, "system.N must be >= 1"),
            (s.delta_f > 0, "system.delta_f must be > 0"),
            (s.alphabet.lower() in ("bpsk", "qpsk", "16qam"), f"unknown alphabet {s.alphabet!r}"),
            (0 <= sp.alpha_max < 1, "spread.alpha_max must lie in [0, 1)"),
            (sp.tau_max >= 0, "spread.tau_max must be >= 0"),
            (sp.P >= 1, "spread.P must be >= 1"),
            (sp.gain_profile in ("uniform", "exponential"), f"unknown gain profile {sp.gain_profile!r}"),
            (ch.policy in ("optimized", "narrowband", "explicit"), f"unknown chirp policy {ch.policy!r}"),
            (ch.policy != "explicit" or (ch.c1 is not None and ch.c1 >= 0), "explicit chirp policy needs c1 >= 0"),
            (ch.N_v >= 0, "chirp.N_v must be >= 0"),
            (d.name in DETECTORS, f"unknown detector {d.name!r}"),
            (d.C >= 1 and s.N % d.C == 0, f"detector.C={d.C} must divide N={s.N}"),
            (d.n_t >= 1, "detector.n_t must be >= 1"),
            (d.rho > 0, "detector.rho must be > 0"),
            (t.min_trials >= 1 and t.max_trials >= t.min_trials, "need 1 <= min_trials <= max_trials"),
            (t.min_bit_errors >= 1, "trials.min_bit_errors must be >= 1"),
            (t.batch >= 1, "trials.batch must be >= 1"),
            (len(self.snr_db) > 0, "snr_db must be nonempty"),
            (0 <= int(self.seed) < 2**64, "seed must be a 64-bit unsigned integer"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # derived objects
    def system_config(self) -> SystemConfig:
        s = self.system
        return SystemConfig(N=s.N, delta_f=s.delta_f, f_c=s.f_c, alphabet=s.alphabet)

    def channel_spread(self) -> ChannelSpread:
        return ChannelSpread.for_system(self.system_config(), self.spread.tau_max, self.spread.alpha_max)

    def chirp_params(self) -> ChirpParams:
        ch = self.chirp
        if ch.policy == "explicit":
            return ChirpParams(ch.c1, ch.c2)
        spread, N = self.channel_spread(), self.system.N
        if ch.policy == "narrowband":
            return ChirpParams(narrowband_c1(spread, N, ch.N_v), ch.c2)
        return ChirpParams(optimize_c1(spread, N, ch.N_v), ch.c2)


_SECTIONS = {
    "system": SystemSection,
    "spread": SpreadSection,
    "chirp": ChirpSection,
    "detector": DetectorSection,
    "trials": TrialsSection,
}


def _coerce(cls, name: str, value):
    ftypes = {f.name: f.type for f in dataclasses.fields(cls)}
    if name not in ftypes:
        raise ConfigError(f"unknown key {cls.__name__}.{name}")
    t = str(ftypes[name])
    try:
        if value is None:
            return None
        if t == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if t.startswith("float"):
            return float(value)
        if t == "bool":
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes")
            return bool(value)
        if t == "str":
            return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value {value!r} for {name}") from None
    return value


def config_from_dict(data: dict) -> SimConfig:
    cfg = SimConfig()
    for key, val in data.items():
        if key in _SECTIONS:
            if not isinstance(val, dict):
                raise ConfigError(f"section {key} must be a table")
            sec = getattr(cfg, key)
            for k, v in val.items():
                setattr(sec, k, _coerce(type(sec), k, v))
        elif key == "snr_db":
            if not isinstance(val, list):
                raise ConfigError("snr_db must be a list")
            cfg.snr_db = [float(v) for v in val]
        elif key == "seed":
            cfg.seed = int(val)
        else:
            raise ConfigError(f"unknown top-level key {key!r}")
    return cfg.validate()


def _parse_scalar(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """``section.key=value`` assignments; values are parsed as TOML scalars or arrays."""
    data = json.loads(json.dumps(data))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = _parse_scalar(raw.strip())
    return data


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> SimConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"malformed config {path}: {e}") from None
    return config_from_dict(apply_overrides(data, overrides or []))


# ---------------------------------------------------------------- trials

def snr_to_n0(snr_db: float) -> float:
    """Unit-energy symbols and unit average channel power: N0 = 10^(-SNR/10)."""
    return float(10 ** (-snr_db / 10))


def trial_seed(master: int, snr_index: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=(int(snr_index), int(trial)))


@dataclass
class TrialResult:
    bit_errors: int
    bits: int
    iterations: int
    macs: float
    trace: list


def run_trial(config: SimConfig, seed, snr_db: float) -> TrialResult:
    """One frame end to end: bits, IDAF, CPP/CPS, channel + noise, guard removal, detection."""
    system = config.system_config()
    spread = config.channel_spread()
    chirp = config.chirp_params()
    alphabet = system.alphabet
    N = system.N
    rng = np.random.default_rng(seed)
    channel = sample_channel(spread, config.spread.P, rng, system, config.spread.gain_profile,
                             config.spread.distinct_delays)
    bits = rng.integers(0, 2, size=N * alphabet.bits_per_symbol)
    idx = alphabet.bits_to_indices(bits)
    x = alphabet.points[idx]
    U = daf_matrix(system, chirp)
    framed = transmit(x, U, channel, chirp)
    H_T = time_domain_channel_matrix(channel, system, chirp)
    N0 = snr_to_n0(snr_db)
    y_T = apply_channel(framed, channel, system, chirp, N0=N0, rng_seed=rng, H_T=H_T)
    det = config.detector
    iterations, macs, trace = 1, 0.0, []
    if det.name == "cd_d_oamp":
        res = cd_d_oamp_detect(y_T, H_T, U, N0, alphabet, C=det.C, n_t=det.n_t, rho=det.rho,
                               energy_threshold=det.energy_threshold, x_true=x)
        dec, iterations, macs, trace = res.decisions, res.iterations, res.macs.total(), res.trace
    else:
        H_D = U.conjugate(H_T)
        y_D = U.forward(y_T)
        if det.name in ("d_oamp", "oamp"):
            C = 1 if det.name == "oamp" else det.C
            res = d_oamp_detect(y_D, H_D, N0, alphabet, C=C, n_t=det.n_t, rho=det.rho,
                                energy_threshold=det.energy_threshold, x_true=x)
            dec, iterations, macs, trace = res.decisions, res.iterations, res.macs.total(), res.trace
        elif det.name == "lmmse":
            _, dec = lmmse_detect(y_D, H_D, N0, alphabet)
            macs = 2 * N**3
        else:
            dec = ml_detect(y_D, H_D, alphabet)
    errors = int(np.sum(alphabet.indices_to_bits(dec) != bits))
    return TrialResult(errors, len(bits), iterations, float(macs), trace)


@dataclass
class BerPoint:
    snr_db: float
    bit_errors: int
    bits: int
    trials: int
    mean_iterations: float
    macs_per_trial: float
    censored: bool

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")


@dataclass
class BerCurve:
    points: list
    config: dict
    seed: int
    version: str = __version__

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# wideband_afdm {self.version}\n")
        buf.write(f"# seed: {self.seed}\n")
        buf.write(f"# config: {json.dumps(self.config, sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["snr_db", "bit_errors", "bits", "ber", "trials", "mean_iterations", "macs_per_trial", "censored"])
        for p in self.points:
            w.writerow([repr(p.snr_db), p.bit_errors, p.bits, repr(p.ber), p.trials,
                        repr(p.mean_iterations), repr(p.macs_per_trial), int(p.censored)])
        return buf.getvalue()


def write_atomic(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _run_one(args):
    config, snr_idx, trial, snr_db = args
    try:
        return run_trial(config, trial_seed(config.seed, snr_idx, trial), snr_db)
    except Exception as e:
        raise TrialError(f"trial failed: snr_db={snr_db} snr_index={snr_idx} trial={trial}: {e!r}") from e


def run_ber_sweep(config: SimConfig, threads: int | None = None, out: str | Path | None = None) -> BerCurve:
    """Trials run in fixed-size batches; stopping is checked between batches only,
    so the trial set (and hence the result) does not depend on ``threads``.
    """
    config.validate()
    config.chirp_params()  # infeasible designs fail here, not inside a trial
    threads = default_threads() if threads is None else max(1, int(threads))
    t = config.trials
    floor = max(t.min_bit_errors, STAT_FLOOR)
    points = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for si, snr in enumerate(config.snr_db):
            errors = bits = trials = 0
            iters = 0
            macs = 0.0
            while trials < t.max_trials and (trials < t.min_trials or errors < t.min_bit_errors):
                n = min(t.batch, t.max_trials - trials)
                jobs = [(config, si, trials + i, snr) for i in range(n)]
                results = list(pool.map(_run_one, jobs)) if pool else [_run_one(j) for j in jobs]
                for r in results:
                    errors += r.bit_errors
                    bits += r.bits
                    iters += r.iterations
                    macs += r.macs
                trials += n
            points.append(BerPoint(float(snr), errors, bits, trials, iters / trials, macs / trials, errors < floor))
    finally:
        if pool:
            pool.shutdown()
    curve = BerCurve(points=points, config=config.to_dict(), seed=int(config.seed))
    if out is not None:
        write_atomic(out, curve.to_csv())
    return curve


def config_error_line(exc: Exception) -> str:
    return f"error: {type(exc).__name__}: {exc}"

