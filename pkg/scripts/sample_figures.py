"""Write CSV samples of the three elastic kinds shown as figures: single, double, special."""
import argparse
from pathlib import Path

from rdfplus.cli import run

FIGURES = {
    "single_1_6_-12.csv": "1,6,-12",
    "double_1_10_1_3.csv": "1/10,1,3",
    "special_1_10_2_0.csv": "1/10,2,0",
}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="figures")
    p.add_argument("--n", type=int, default=512)
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, params in FIGURES.items():
        with open(out / name, "w") as fh:
            code = run(["--mode", "sample", "--n", str(args.n), params], fh)
        print(f"{out / name}: {'ok' if code == 0 else 'failed'}")


if __name__ == "__main__":
    main()
