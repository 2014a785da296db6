"""Hyperparameter sweeps and the family comparison on a feature CSV.

Runs GBT rounds and RF trees over 10..500 step 10, KNN k over 1..100, and
10-fold CV of every model family at default settings. Each result lands in
its own CSV under --out-dir; a short summary is printed at the end.
"""
import argparse
import csv
import logging
import time
from pathlib import Path

from fakespeech.dataset import read_dataset
from fakespeech.evaluation import balance, kfold_cv, sweep, write_sweep_csv
from fakespeech.models import SWEEP_PARAM, Family, ModelSpec

log = logging.getLogger("sweeps")

SWEEPS = {
    "gbt": range(10, 501, 10),
    "rf": range(10, 501, 10),
    "knn": range(1, 101),
}


def run_sweep(ds, family, grid, out_dir, args):
    t0 = time.perf_counter()

    def progress(value, rep):
        log.info("%s %d: accuracy %.4f", family, value, rep.mean("accuracy"))

    res = sweep(ds, family, list(grid), args.folds, args.seed,
                latency_n=args.latency_n, progress=progress)
    write_sweep_csv(out_dir / f"sweep_{family}.csv", res, SWEEP_PARAM[Family(family)])
    best = max(res, key=lambda r: r[1].mean("accuracy"))
    log.info("%s sweep done in %.0f s", family, time.perf_counter() - t0)
    return best[0], best[1].mean("accuracy")


def compare_families(ds, out_dir, args):
    rows = []
    for family in Family:
        rep = kfold_cv(ds, ModelSpec(family), args.folds, args.seed)
        s = rep.summary()
        rows.append([family.value, s["accuracy_mean"], s["accuracy_std"], s["mcc_mean"], s["roc_auc_mean"]])
        log.info("%s: accuracy %.4f", family.value, s["accuracy_mean"])
    with open(out_dir / "families.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["family", "accuracy_mean", "accuracy_std", "mcc_mean", "roc_auc_mean"])
        w.writerows(rows)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dataset", help="feature CSV (26 feature columns + LABEL)")
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--only", nargs="*", choices=[*SWEEPS, "families"],
                    help="subset of runs (default: all)")
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--latency-n", type=int, default=0,
                    help="also time single-row inference at each grid point")
    ap.add_argument("--no-balance", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds = read_dataset(args.dataset)
    if not args.no_balance:
        ds = balance(ds, args.seed)
    runs = args.only or [*SWEEPS, "families"]

    summary = []
    for family in runs:
        if family == "families":
            for name, acc, sd, *_ in compare_families(ds, out_dir, args):
                summary.append(f"{name:6s} default      accuracy {acc:.4f} +/- {sd:.4f}")
        else:
            value, acc = run_sweep(ds, family, SWEEPS[family], out_dir, args)
            summary.append(f"{family:6s} best at {value:<5d} accuracy {acc:.4f}")
    print("\n".join(summary))


if __name__ == "__main__":
    main()
