"""Phase-transition sweep: frequencies of empty (E1), sure-screening (E2),
and partial (E3) selections across a grid of target FDR levels straddling
1/s.

Examples
--------
    python3 scripts/run_phase_sweep.py --out results/phase
    python3 scripts/run_phase_sweep.py --alphas 0.02,0.05,0.1,0.2,0.5,0.9
"""

from __future__ import annotations

import argparse
from pathlib import Path

from pcscreen.harness import (
    ExperimentConfig,
    run_phase_transition,
    write_phase_csv,
    write_records_jsonl,
)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model", default="4a")
    parser.add_argument("--n", type=int, default=600)
    parser.add_argument("--p", type=int, default=1000)
    parser.add_argument("--reps", type=int, default=100)
    parser.add_argument("--n1", type=int, default=150)
    parser.add_argument("--d", type=int, default=50)
    parser.add_argument("--alphas", default="0.02,0.05,0.1,0.2,0.3")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default="results/phase")
    args = parser.parse_args(argv)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    config = ExperimentConfig(
        models=(args.model,),
        n=args.n,
        p=args.p,
        replications=args.reps,
        alphas=tuple(float(a) for a in args.alphas.split(",") if a.strip()),
        n1=args.n1,
        d=args.d,
        base_seed=args.seed,
        threads=args.threads,
    )
    table, records = run_phase_transition(config)
    write_phase_csv(table, outdir / "phase_summary.csv")
    write_records_jsonl(records, outdir / "phase_records.jsonl")
    for row in table.rows:
        print(
            f"{row.model:>3} alpha={row.alpha:<5g} "
            f"E1={row.e1_freq:<6.3f} E2={row.e2_freq:<6.3f} E3={row.e3_freq:.3f}"
        )
    print(f"wrote {outdir}/phase_summary.csv and phase_records.jsonl")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
