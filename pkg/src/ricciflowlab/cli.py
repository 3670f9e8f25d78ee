"""Command-line front end: run / converge / export-plots.

Exit codes: 0 all certified checks hold, 2 a certified check is
violated, 3 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .heat import ConfigurationError
from .scenarios import EXIT_CONFIG, convergence_study, load_config, run_scenario


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="scenario YAML file")
    p.add_argument("--out", default=None, help="output directory (report.json, CSV series)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="advisory thread count, recorded only (numpy controls its own pools)",
    )
    p.add_argument(
        "--tolerance-scale",
        type=float,
        default=1.0,
        help="multiplies the c_tol of every verdict tolerance",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ricciflowlab",
        description="Ricci-flow Harnack / frequency verification scenarios",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a scenario")
    _add_common(run_p)
    conv_p = sub.add_parser("converge", help="refinement study for a scenario")
    _add_common(conv_p)
    conv_p.add_argument("--levels", type=int, default=3)
    plot_p = sub.add_parser("export-plots", help="emit two-column plot data from a run directory")
    plot_p.add_argument("--out", required=True, help="run directory holding series_*.csv")
    return parser


def _load(args) -> "ScenarioConfig":
    config = load_config(args.config)
    if args.seed is not None:
        raw = dict(config.raw, seed=int(args.seed))
        config = load_config(raw)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "export-plots":
        return _export_plots(Path(args.out))
    try:
        config = _load(args)
    except (ConfigurationError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "run":
        report = run_scenario(config, outdir=args.out, tolerance_scale=args.tolerance_scale)
        for entry in report.checks:
            print(f"[{entry['verdict']:>12}] {entry.get('id', entry.get('name'))}")
        if report.exit_code == EXIT_CONFIG:
            msg = report.checks[0]["data"].get("message", "")
            print(f"configuration error: {msg}", file=sys.stderr)
        return report.exit_code
    result = convergence_study(config, levels=args.levels, outdir=args.out)
    for cid, info in result["orders"].items():
        print(f"{cid}: residuals={info['residuals']} orders={info['orders']}")
    worst = max(result["exit_codes"])
    return worst


def _export_plots(outdir: Path) -> int:
    if not outdir.is_dir():
        print(f"not a run directory: {outdir}", file=sys.stderr)
        return EXIT_CONFIG
    count = 0
    for csv_path in sorted(outdir.glob("series_*.csv")):
        lines = csv_path.read_text().splitlines()
        header = lines[0].split(",")
        rows = [line.split(",") for line in lines[1:] if line.strip()]
        if "t" not in header:
            continue
        ti = header.index("t")
        for j, col in enumerate(header):
            if j == ti:
                continue
            dat = outdir / f"plot_{csv_path.stem[7:]}_{col}.dat"
            body = "\n".join(f"{r[ti]} {r[j]}" for r in rows)
            dat.write_text(body + "\n")
            count += 1
    print(f"wrote {count} plot-data files")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
