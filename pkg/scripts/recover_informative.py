"""How often RFECV keeps the informative columns of a planted Poisson design, over many seeds.

    python scripts/recover_informative.py --seeds 10 --family poisson
"""
import argparse

from bargecount.evaluation import rfecv
from bargecount.synth import informative_design


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--family", default="poisson")
    ap.add_argument("--n-informative", type=int, default=5)
    ap.add_argument("--n-noise", type=int, default=15)
    ap.add_argument("--effect", type=float, default=0.4)
    args = ap.parse_args()
    hp = {"n_trees": 100} if args.family == "random_forest" else {}
    for seed in range(args.seeds):
        data = informative_design(200, args.n_informative, args.n_noise, seed=seed, effect=args.effect)
        res = rfecv(data, args.family, hp, k=5, seed=seed)
        kept = sum(name.startswith("INF_") for name in res.selected)
        print(f"seed {seed:3d}: kept {res.n_selected:2d} features, "
              f"{kept}/{args.n_informative} informative")


if __name__ == "__main__":
    main()
