"""Steering region maps over cooperativities and angles, plus two-way band edges at C- = 50."""

import math
from pathlib import Path

from _common import SCENARIOS, out_dir_arg, run_cli

from steerlab.regions import two_way_band

MAPS = [
    "contour_c_theta035",
    "contour_c_theta030",
    "contour_c_theta040",
    "contour_c_theta030_vacuum",
    "contour_theta_equal",
    "contour_theta_double",
]


def main():
    args = out_dir_arg(__doc__).parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in MAPS:
        run_cli(["contour", "--scenario", str(SCENARIOS / f"{name}.json"), "--out", str(out / f"{name}.csv"),
                 "--threads", str(args.threads)])
        print(f"wrote {out / name}.csv")
    print("two-way bands in C+/C- at C- = 50, theta- = 0.35 pi")
    for scenario in ("hot_hot", "hot_vacuum"):
        for tp in (0.3, 0.35, 0.4):
            bands = two_way_band(50.0, 0.35 * math.pi, tp * math.pi, scenario)
            txt = ", ".join(f"[{a:.3f}, {b:.3f}]" for a, b in bands) or "none"
            print(f"  {scenario:10s} theta+ = {tp:.2f} pi: {txt}")


if __name__ == "__main__":
    main()
