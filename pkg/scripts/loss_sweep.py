"""Largest tolerable loss per C- and optimized E+|- vs loss, for both thermal scenarios."""

from pathlib import Path

from _common import out_dir_arg, run_cli


def main():
    args = out_dir_arg(__doc__).parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for preset in ("hot_hot", "hot_vacuum"):
        path = out / f"loss_{preset}.csv"
        run_cli(["losssweep", "--scenario", str(Path(__file__).parent / "scenarios" / "losssweep.json"),
                 "--preset", preset, "--out", str(path)])
        print(f"wrote {path} and {path}.curve.csv")


if __name__ == "__main__":
    main()
