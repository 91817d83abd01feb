"""Minimum-model-size quantile study over the linear/Poisson, nonlinear, and
bivariate-response model families (desk scale by default).

Examples
--------
    python3 scripts/run_quantile_tables.py --out results/quantiles
    python3 scripts/run_quantile_tables.py --models 1a,1b --reps 200 --p 5000
"""

from __future__ import annotations

import argparse
from pathlib import Path

from pcscreen.harness import (
    ExperimentConfig,
    run_quantile_experiment,
    write_quantile_csv,
    write_records_jsonl,
)

DESK_MODELS = ("1a", "1b", "1c", "1d", "1e", "1f", "2a", "2b", "2c", "2d", "3a", "3b")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--models", default=",".join(DESK_MODELS))
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--p", type=int, default=1000)
    parser.add_argument("--reps", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default="results/quantiles")
    args = parser.parse_args(argv)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    config = ExperimentConfig(
        models=tuple(m.strip() for m in args.models.split(",") if m.strip()),
        n=args.n,
        p=args.p,
        replications=args.reps,
        base_seed=args.seed,
        threads=args.threads,
    )
    table, records = run_quantile_experiment(config)
    write_quantile_csv(table, outdir / "quantile_summary.csv")
    write_records_jsonl(records, outdir / "quantile_records.jsonl")
    for row in table.rows:
        quantiles = ", ".join(f"{q:g}" for q in row.quantiles)
        print(f"{row.model:>3} {row.method:<12} [{quantiles}]")
    print(f"wrote {outdir}/quantile_summary.csv and quantile_records.jsonl")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
