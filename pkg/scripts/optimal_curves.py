"""Optimized steering vs C- for both objectives, scenarios and loss levels, free and f = 0."""

from pathlib import Path

from _common import out_dir_arg, run_cli


def main():
    ap = out_dir_arg(__doc__)
    ap.add_argument("--points", type=int, default=13, help="log grid points over C- in [1, 1000]")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    import numpy as np

    grid = [f"{c:.17g}" for c in np.logspace(0, 3, args.points)]
    for preset in ("hot_hot", "hot_vacuum"):
        for eps in ("0", "0.2"):
            for obj in ("e_pm", "e_mp"):
                path = out / f"optimal_{preset}_eps{eps}_{obj}.csv"
                run_cli(["optimize", "--preset", preset, "--objective", obj, "--epsilon", eps,
                         "--c-minus", *grid, "--out", str(path)])
                print(f"wrote {path}")


if __name__ == "__main__":
    main()
