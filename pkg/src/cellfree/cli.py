"""Command-line entry point: ``cellfree simulate`` and ``cellfree fronthaul``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import fronthaul as fh
from .config import FORMATS, ScenarioConfig, load_config, packaged_scenarios, read_config_text
from .geometry import ConfigurationError
from .harness import QUANTILES, aggregate, run_simulation, write_samples_csv, write_summary_json

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
SAMPLES_FILE = "samples.csv"
SUMMARY_FILE = "summary.json"

log = logging.getLogger("cellfree")


def format_quantile_table(summary) -> str:
    head = f"{'level':<10}" + "".join(f"{f'{int(q * 100)}%':>10}" for q in QUANTILES) + f"{'mean':>10}"
    rows = [head]
    for level in summary.samples:
        qs = summary.quantile(level, list(QUANTILES))
        rows.append(f"{level:<10}" + "".join(f"{q:>10.3f}" for q in qs) + f"{summary.mean(level):>10.3f}")
    if "sic" in summary.sum_se:
        s = summary.sum_se["sic"]
        rows.append(f"sum-SE with MMSE-SIC: mean {float(s.mean()):.3f} bit/s/Hz over {len(s)} drops")
    return "\n".join(rows)


def cmd_simulate(args) -> int:
    try:
        cfg: ScenarioConfig = load_config(args.config, args.override)
        if args.format:
            cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, format=args.format))
        if args.out:
            cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, dir=args.out))
        cfg.validate()
        if args.threads < 1:
            raise ConfigurationError("--threads must be at least 1")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    plan = cfg.simulation
    if cfg.layout.num_aps * cfg.layout.antennas_per_ap >= 400 and plan.num_drops * plan.blocks_per_drop > 2000:
        log.warning("full-scale scenario: expect a long run time")
    try:
        results = run_simulation(cfg.scenario(), threads=args.threads)
        summary = aggregate(results)
        out = Path(cfg.output.dir)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.output.format in ("csv", "both"):
            write_samples_csv(results, out / SAMPLES_FILE)
        if cfg.output.format in ("json", "both"):
            write_summary_json(summary, results, cfg.to_dict(), out / SUMMARY_FILE)
    except Exception as exc:  # noqa: BLE001
        log.debug("simulation failed", exc_info=True)
        print(f"simulation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(format_quantile_table(summary))
    return EXIT_OK


def _parse_range(text: str) -> tuple[int, int]:
    first, sep, last = text.partition(":")
    try:
        return (int(first), int(last)) if sep else (int(first), int(first))
    except ValueError as exc:
        raise ConfigurationError(f"--sweep expects FIRST:LAST, got {text!r}") from exc


def cmd_fronthaul(args) -> int:
    try:
        base = load_config(args.config).fronthaul if args.config else None

        def pick(flag, name, default):
            if flag is not None:
                return flag
            return getattr(base, name) if base else default

        tau_c = pick(args.tau_c, "tau_c", 200)
        tau_p = pick(args.tau_p, "tau_p", 10)
        N = pick(args.antennas, "antennas_per_ap", 4)
        L = pick(args.aps, "num_aps", 100)
        K = pick(args.ues, "num_ues", 40)
        sweep_range = _parse_range(args.sweep) if args.sweep else (tuple(base.sweep) if base and base.sweep else None)
        report = fh.fronthaul_table(tau_c, tau_p, N, L, K)
        rows = None
        if sweep_range:
            first, last = sweep_range
            if first > last:
                raise ConfigurationError("sweep range must be increasing")
            rows = fh.sweep(range(first, last + 1), tau_p, N, L, K)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    doc = json.dumps(report.to_json(), indent=2)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "fronthaul.json").write_text(doc + "\n")
        if rows:
            with open(out / "fronthaul_sweep.csv", "w", newline="") as f:
                w = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
    print(doc)
    if rows:
        crossing = next((r["tau_c"] for r in rows if r["level4_less_signaling"]), None)
        print(f"Level 4 needs less fronthaul than Levels 2-3 from tau_c = {crossing}")
    return EXIT_OK


def cmd_scenarios(args) -> int:
    if args.name:
        try:
            print(read_config_text(args.name), end="")
        except ConfigurationError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    print("\n".join(packaged_scenarios()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellfree", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a Monte-Carlo scenario")
    s.add_argument("--config", required=True, help="TOML file or packaged scenario name")
    s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", help="output directory (default: output.dir)")
    s.add_argument("--format", choices=FORMATS)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fronthaul", help="fronthaul signaling load per AP")
    f.add_argument("--config", help="TOML file or packaged scenario with a [fronthaul] section")
    f.add_argument("--tau-c", type=int)
    f.add_argument("--tau-p", type=int)
    f.add_argument("--antennas", type=int, help="antennas per AP (N)")
    f.add_argument("--aps", type=int, help="number of APs (L)")
    f.add_argument("--ues", type=int, help="number of UEs (K)")
    f.add_argument("--sweep", metavar="FIRST:LAST", help="inclusive tau_c range for the CSV sweep")
    f.add_argument("--out", help="directory for fronthaul.json and fronthaul_sweep.csv")
    f.set_defaults(func=cmd_fronthaul)

    c = sub.add_parser("scenarios", help="list packaged scenarios or print one")
    c.add_argument("name", nargs="?")
    c.set_defaults(func=cmd_scenarios)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
