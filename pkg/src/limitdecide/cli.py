"""Command-line interface.

Subcommands:

* decide-mean: run the Monte Carlo mean-membership experiment from a
  config file and write summary reports (csv + json).
* adversary: interrogate a candidate prefix decider above an off-target
  stem and emit a dilemma certificate as JSON.
* blackbox: scan a raw bit file against a configured computable target
  with the prefix-match decider, emitting a per-index decision CSV.
* report: render the agreement-curve figure from a summary, writing the
  image alongside the delimited curve output.

Exit codes: 0 success, 2 config error, 3 runtime failure, 4 inconclusive
adversary certificate.

Config files are INI; see configs/example.ini and docs/formats.md.
Unknown sections or keys are rejected, as are references to missing
files.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import sys
from fractions import Fraction
from pathlib import Path

from . import adversary as adv
from .harness import ExperimentSpec, Summary, emit_report, monte_carlo, run_trial
from .stats import LilParams
from .streams import BitSource, CHARACTERISTIC_SETS, StreamSpec, file_bits, parse_mean

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_INCONCLUSIVE = 4


class ConfigError(ValueError):
    pass


_KNOWN_KEYS = {
    "stream": {"distribution", "mean", "variance", "low", "high", "p", "shift",
               "values", "probs", "seed"},
    "delta2": {"set", "manifest"},
    "params": {"epsilon", "n_min"},
    "experiment": {"horizon", "trials", "base_seed"},
    "output": {"dir"},
    "blackbox": {"target"},
}


@dataclasses.dataclass
class Config:
    stream: StreamSpec
    set_id: str
    manifest: str | None
    params: LilParams
    horizon: int
    trials: int
    base_seed: int
    out_dir: Path
    blackbox_target: str = "evens"

    def experiment_spec(self) -> ExperimentSpec:
        return ExperimentSpec(stream=self.stream, set_id=self.set_id,
                              params=self.params, horizon=self.horizon,
                              trials=self.trials, base_seed=self.base_seed,
                              manifest=self.manifest)


def _build_stream(section) -> StreamSpec:
    dist = section.get("distribution", "normal")
    seed = int(section.get("seed", "0"))
    try:
        if dist == "normal":
            return StreamSpec.normal(parse_mean(section.get("mean", "0")),
                                     float(section.get("variance", "1")), seed)
        if dist == "uniform":
            return StreamSpec.uniform(Fraction(section.get("low", "0")),
                                      Fraction(section.get("high", "1")), seed)
        if dist == "shifted-bernoulli":
            return StreamSpec.shifted_bernoulli(Fraction(section.get("p", "0.5")),
                                                Fraction(section.get("shift", "0")),
                                                seed)
        if dist == "discrete-pmf":
            values = [Fraction(v) for v in section.get("values", "").split(",")]
            probs = [Fraction(p) for p in section.get("probs", "").split(",")]
            return StreamSpec.discrete(values, probs, seed)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"[stream] {e}") from e
    raise ConfigError(f"[stream] distribution: unknown value {dist!r}")


def load_config(path: str | Path, overrides: dict | None = None) -> Config:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    overrides = overrides or {}

    def pick(section: str, key: str, default: str) -> str:
        if key in overrides and overrides[key] is not None:
            return str(overrides[key])
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    stream_section = dict(parser["stream"]) if parser.has_section("stream") else {}
    if overrides.get("mean") is not None:
        stream_section["mean"] = str(overrides["mean"])
    stream = _build_stream(stream_section)

    manifest = pick("delta2", "manifest", "") or None
    if manifest is not None and not Path(manifest).exists():
        raise ConfigError(f"[delta2] manifest: file {manifest} does not exist")

    try:
        params = LilParams(epsilon=float(pick("params", "epsilon", "0.1")),
                           n_min=int(pick("params", "n_min", "16")))
    except ValueError as e:
        raise ConfigError(f"[params] {e}") from e

    try:
        horizon = int(pick("experiment", "horizon", "16384"))
        trials = int(pick("experiment", "trials", "100"))
        base_seed = int(pick("experiment", "base_seed", "0"))
    except ValueError as e:
        raise ConfigError(f"[experiment] {e}") from e

    target = pick("blackbox", "target", "evens")
    if target not in CHARACTERISTIC_SETS:
        raise ConfigError(f"[blackbox] target: unknown computable set {target!r}")

    return Config(
        stream=stream,
        set_id=pick("delta2", "set", "evens"),
        manifest=manifest,
        params=params,
        horizon=horizon,
        trials=trials,
        base_seed=base_seed,
        out_dir=Path(pick("output", "dir", "reports")),
        blackbox_target=target,
    )


def dump_config(cfg: Config) -> str:
    """Effective config as round-trippable INI text."""
    parser = configparser.ConfigParser(interpolation=None)
    spec = cfg.stream
    stream: dict[str, str] = {"distribution": spec.distribution,
                              "seed": str(spec.seed)}
    if spec.distribution == "normal":
        stream["mean"] = str(spec.mean)
        stream["variance"] = repr(spec.variance)
    elif spec.distribution == "uniform":
        low, high = spec.params
        stream["low"], stream["high"] = repr(low), repr(high)
    elif spec.distribution == "shifted-bernoulli":
        p, shift = spec.params
        stream["p"], stream["shift"] = repr(p), repr(shift)
    else:
        values, probs = spec.params
        stream["values"] = ",".join(repr(v) for v in values)
        stream["probs"] = ",".join(repr(p) for p in probs)
    parser["stream"] = stream
    parser["delta2"] = {"set": cfg.set_id, "manifest": cfg.manifest or ""}
    parser["params"] = {"epsilon": repr(cfg.params.epsilon),
                        "n_min": str(cfg.params.n_min)}
    parser["experiment"] = {"horizon": str(cfg.horizon),
                            "trials": str(cfg.trials),
                            "base_seed": str(cfg.base_seed)}
    parser["output"] = {"dir": str(cfg.out_dir)}
    parser["blackbox"] = {"target": cfg.blackbox_target}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_decide_mean(args) -> int:
    try:
        cfg = load_config(args.config, overrides={
            "trials": args.trials, "horizon": args.horizon,
            "base_seed": args.seed, "epsilon": args.epsilon,
            "set": args.set, "dir": args.out, "mean": None,
        })
        spec = cfg.experiment_spec()
        spec.resolve()  # surface unknown set ids as config errors
    except (ConfigError, KeyError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dump_config:
        print(dump_config(cfg), end="")
        return EXIT_OK
    try:
        summary = monte_carlo(spec, workers=args.workers)
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = emit_report(summary, "csv", cfg.out_dir / "summary.csv")
        json_path = emit_report(summary, "json", cfg.out_dir / "summary.json")
        if args.trace_out:
            trace = run_trial(spec, 0)
            with open(args.trace_out, "w", newline="") as fp:
                trace.to_csv(fp)
        print(f"final_accuracy={summary.final_accuracy} trials={summary.trials} "
              f"failures={summary.failures}")
        print(f"wrote {csv_path} and {json_path}")
    except Exception as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_adversary(args) -> int:
    try:
        proc = adv.builtin_procedure(args.procedure)
        stem = adv.parse_bits(args.stem)
        chi = CHARACTERISTIC_SETS[args.target]
        target = lambda n: int(chi(n))
    except (ValueError, KeyError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cert = adv.dilemma_certificate(proc, target, stem, args.depth, args.rho)
    except (adv.DepthError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    text = cert.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_INCONCLUSIVE if cert.kind == adv.INCONCLUSIVE else EXIT_OK


def cmd_blackbox(args) -> int:
    try:
        cfg = load_config(args.config, overrides={})
        source = BitSource.from_file(args.bitfile)
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        chi = CHARACTERISTIC_SETS[cfg.blackbox_target]
        target = lambda n: int(chi(n))
        bits = file_bits(source)
        total = len(bits)
        limit = total if args.limit is None else min(args.limit, total)
        first_mismatch = None
        out_path = Path(args.out) if args.out else None
        rows = []
        decision = 1
        for n in range(total):
            if decision == 1 and int(bits[n]) != target(n):
                first_mismatch = n
                decision = 0
            if n < limit:
                rows.append((n + 1, int(bits[n]), decision))
            elif first_mismatch is not None:
                break
        if out_path:
            with open(out_path, "w", newline="") as fp:
                w = csv.writer(fp)
                w.writerow(["n", "bit", "decision"])
                w.writerows(rows)
        if first_mismatch is None:
            print(f"no mismatch in {total} bits")
        else:
            print(f"first mismatch at bit {first_mismatch}")
    except Exception as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_report(args) -> int:
    from .plotting import render_agreement
    try:
        summary = Summary.from_json(Path(args.summary).read_text())
    except (OSError, ValueError, TypeError, KeyError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        fmt = args.format
        data_path = emit_report(summary, fmt, out_dir / f"agreement.{fmt}")
        fig_path = render_agreement(summary, out_dir / "agreement.png")
        print(f"wrote {data_path} and {fig_path}")
    except Exception as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="limitdecide",
        description="Asymptotic decision procedures over seeded sample streams, "
                    "with a finite-depth adversary for prefix deciders.")
    sub = p.add_subparsers(dest="command", required=True)

    dm = sub.add_parser("decide-mean", help="run the mean-membership experiment")
    dm.add_argument("--config", required=True, help="INI config path")
    dm.add_argument("--trials", type=int, help="override [experiment] trials")
    dm.add_argument("--horizon", type=int, help="override [experiment] horizon")
    dm.add_argument("--seed", type=int, help="override [experiment] base_seed")
    dm.add_argument("--epsilon", type=float, help="override [params] epsilon")
    dm.add_argument("--set", help="override [delta2] set")
    dm.add_argument("--out", help="override [output] dir")
    dm.add_argument("--workers", type=int, default=1, help="trial thread count")
    dm.add_argument("--trace-out", help="also write trial 0's decision trace CSV")
    dm.add_argument("--dump-config", action="store_true",
                    help="print the effective config and exit")
    dm.set_defaults(func=cmd_decide_mean)

    ad = sub.add_parser("adversary", help="emit a dilemma certificate")
    ad.add_argument("--procedure", required=True,
                    help="constant-1 | constant-0 | parity-vote | "
                         "majority-window:<w> | prefix-match:<set> | bytecode:<path>")
    ad.add_argument("--stem", required=True, help="off-target stem as 0/1 text")
    ad.add_argument("--depth", type=int, required=True)
    ad.add_argument("--rho", type=float, default=0.9,
                    help="acceptance density for a persistent branch")
    ad.add_argument("--target", default="evens",
                    help="computable target the stem must deviate from")
    ad.add_argument("--out", help="write certificate JSON here too")
    ad.set_defaults(func=cmd_adversary)

    bb = sub.add_parser("blackbox", help="prefix-match a bit file against a target")
    bb.add_argument("--config", required=True)
    bb.add_argument("bitfile", help="raw bit file, MSB-first within each byte")
    bb.add_argument("--out", help="per-index decision CSV path")
    bb.add_argument("--limit", type=int, help="cap on CSV rows")
    bb.set_defaults(func=cmd_blackbox)

    rp = sub.add_parser("report", help="render figures from a summary")
    rp.add_argument("--summary", required=True, help="summary JSON path")
    rp.add_argument("--out", required=True, help="output directory")
    rp.add_argument("--format", choices=("csv", "json"), default="csv",
                    help="delimited output alongside the figure")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
