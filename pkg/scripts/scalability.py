"""Wall time and peak memory of the scalable pipeline on uniform random hypergraphs.

Each (size, seed) point runs in a fresh interpreter. Prints a table and the
per-doubling growth factors; ``--json`` also writes the full report.

    python3 scripts/scalability.py --sizes 25000 50000 100000 --seeds 1 2
"""
import argparse
import json

from hyperembed.bench import scaling_study


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[25_000, 50_000, 100_000])
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2])
    p.add_argument("--repeats", type=int, default=2)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--json", help="write the full report here")
    args = p.parse_args()

    rep = scaling_study(args.sizes, args.seeds, args.repeats, memory_seeds=args.seeds[:1],
                        threads=args.threads)
    print(f"{'n':>8} {'seconds':>9} {'peak MB':>9}")
    for n in rep.sizes:
        print(f"{n:>8} {rep.seconds(n):9.2f} {rep.peak_bytes(n) / 2**20:9.1f}")
    print("time growth per step:  ", " ".join(f"{r:.2f}" for r in rep.time_ratios()))
    print("memory growth per step:", " ".join(f"{r:.2f}" for r in rep.memory_ratios()))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rep.to_dict(), fh, indent=2)


if __name__ == "__main__":
    main()
