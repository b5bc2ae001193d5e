"""Relative improvement from monitoring the output light, at optimized E+|- and E-|+ operating points."""

from pathlib import Path

from _common import SCENARIOS, out_dir_arg, run_cli


def main():
    args = out_dir_arg(__doc__).parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for preset in ("hot_hot", "hot_vacuum"):
        for obj in ("e_pm", "e_mp"):
            path = out / f"conditional_{preset}_{obj}.csv"
            run_cli(["conditional", "--scenario", str(SCENARIOS / "conditional_at_optima.json"), "--at-optima",
                     "--preset", preset, "--objective", obj, "--out", str(path)])
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
