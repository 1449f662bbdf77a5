"""Sweep compiled-circuit depth on Haar-random target sets.

For each (qubits, depth, seed) cell this runs the full structure search and
records the mean train fidelity, the held-out expected risk, and the size of
the winning circuit, giving the fidelity-vs-depth trade-off table for the
random-unitary compilation task.

    python3 scripts/depth_sweep.py --qubits 2 --depths 1:6 --seeds 3 \
        --out runs/depth_sweep.csv
"""

import argparse
import sys
import time

from gaqc import pipelines


def parse_range(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, default=2)
    ap.add_argument("--depths", type=parse_range, default=[1, 2, 3, 4, 5],
                    help="inclusive lo:hi range or comma list")
    ap.add_argument("--seeds", type=int, default=3, help="seeds 0..n-1 per cell")
    ap.add_argument("--train", type=int, default=20)
    ap.add_argument("--test", type=int, default=10)
    ap.add_argument("--out", default="runs/depth_sweep.csv")
    args = ap.parse_args(argv)

    header = ("qubits", "depth", "seed", "train_fidelity", "test_risk",
              "param_count", "two_qubit_gates")
    rows = []
    for depth in args.depths:
        for seed in range(args.seeds):
            t0 = time.time()
            result = pipelines.run_benchmark(pipelines.RunConfig(
                "benchmark", num_qubits=args.qubits, depth=depth, seed=seed,
                n_train=args.train, n_test=args.test))
            metrics = result.manifest["search"]["genome_metrics"]
            rows.append((args.qubits, depth, seed,
                         result.manifest["train_fidelity_mean"],
                         result.manifest["test_expected_risk"],
                         metrics["param_count"], metrics["two_qubit_gates"]))
            print(f"qubits={args.qubits} depth={depth} seed={seed}: "
                  f"fidelity={rows[-1][3]:.4f} risk={rows[-1][4]:.4f} "
                  f"({time.time() - t0:.0f} s)", flush=True)

    with open(args.out, "w") as fh:
        fh.write(pipelines.format_csv(header, rows))
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
