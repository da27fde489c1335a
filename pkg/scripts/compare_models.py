"""Cross-validated MAE and RFECV selection for all four model families on synthetic tows.

    python scripts/compare_models.py --n-samples 200 --seed 0 --k 2
"""
import argparse
import time

import numpy as np

from bargecount.evaluation import cross_validate, format_table, rfecv, selection_frequency
from bargecount.fusion import samples_to_design
from bargecount.models import FAMILIES
from bargecount.synth import SynthConfig, generate_labeled_dataset

FAST = {"random_forest": {"n_trees": 50}, "adaboost_r2": {"n_estimators": 30}}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--no-select", action="store_true", help="skip RFECV")
    args = ap.parse_args()

    ds = generate_labeled_dataset(SynthConfig(n_samples=args.n_samples, seed=args.seed))
    data = samples_to_design(ds.samples)
    baseline = float(np.mean(np.abs(data.y - data.y.mean())))
    print(f"{data.n} samples, {len(data.feature_names)} features, mean-predictor MAE {baseline:.3f}\n")

    rows, selections = [], {}
    for family in FAMILIES:
        hp = FAST.get(family, {})
        t0 = time.perf_counter()
        cv = cross_validate(data, family, hp, k=args.k, seed=args.seed)
        row = [family, f"{cv.mean_mae:.3f}"]
        if not args.no_select:
            sel = rfecv(data, family, hp, k=args.k, seed=args.seed)
            selections[family] = sel
            best = max(s.score for s in sel.trace)
            row += [sel.n_selected, f"{-best:.3f}"]
        rows.append(row + [f"{time.perf_counter() - t0:.1f}"])
    headers = ["family", "cv_mae"] + ([] if args.no_select else ["n_selected", "rfecv_mae"]) + ["seconds"]
    print(format_table(rows, headers))
    if selections:
        print("\nfeatures kept by the most families:")
        print(format_table(selection_frequency(selections)[:15], ("feature", "n_models")))


if __name__ == "__main__":
    main()
