"""Closed form vs Lyapunov on random configs, then Lyapunov vs Monte Carlo at one point."""

from pathlib import Path

from _common import SCENARIOS, out_dir_arg, run_cli


def main():
    ap = out_dir_arg(__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lyap = out / "oracle_lyapunov.json"
    lyap.write_text('{"oracle": {"method": "lyapunov", "n_configs": 1000}}\n')
    run_cli(["oracle", "--scenario", str(lyap), "--seed", str(args.seed), "--out", str(out / "oracle_lyapunov.csv")])
    run_cli(["oracle", "--scenario", str(SCENARIOS / "oracle_mc.json"), "--seed", str(args.seed),
             "--threads", str(args.threads), "--out", str(out / "oracle_mc.csv")])


if __name__ == "__main__":
    main()
