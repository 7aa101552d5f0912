"""Scalability measurements on uniform random hypergraphs.

Every (size, seed) point runs in a fresh interpreter so that allocator state
and cached buffers of earlier points do not leak into its numbers. Wall time
is the minimum over repeats after an untimed warm-up; memory is the peak
resident set size of the embedding call above the resident size just
before it (the kernel's high-water mark is reset first, where supported).
"""
from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
import tracemalloc
from dataclasses import asdict, dataclass, replace

import numpy as np
from threadpoolctl import threadpool_limits

from .params import EmbedParams
from .sahe import sahe_embed
from .synth import synth_uniform

WARMUP_NODES = 3000


@dataclass(frozen=True)
class PointResult:
    n: int
    seed: int
    seconds: list[float]
    peak_bytes: int
    memory_method: str
    svd_matvecs: int
    stage_seconds: dict

    @property
    def best_seconds(self) -> float:
        return min(self.seconds)


def _status_kib(field: str) -> int | None:
    try:
        with open("/proc/self/status") as fh:
            for line in fh:
                if line.startswith(field + ":"):
                    return int(line.split()[1])
    except OSError:
        return None
    return None


def _reset_peak_rss() -> bool:
    try:
        with open("/proc/self/clear_refs", "w") as fh:
            fh.write("5")
        return True
    except OSError:
        return False


def _peak_memory(H, params: EmbedParams) -> tuple[int, str]:
    """Peak bytes allocated by one embedding call."""
    before = _status_kib("VmRSS")
    if before is not None and _reset_peak_rss():
        sahe_embed(H, params)
        return 1024 * (_status_kib("VmHWM") - before), "rss"
    tracemalloc.start()
    sahe_embed(H, params)
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    return peak, "tracemalloc"


def run_point(n: int, seed: int = 1, params: EmbedParams | None = None, repeats: int = 1,
              memory: bool = True, threads: int = 1) -> PointResult:
    """Measure one instance in the current process."""
    params = params or EmbedParams()
    with threadpool_limits(threads):
        # warm-up covers JIT compilation of the approximate KNN path
        sahe_embed(synth_uniform(WARMUP_NODES, seed=seed), replace(params, knn="approx"))
        H = synth_uniform(n, seed=seed)
        peak, how = _peak_memory(H, params) if memory else (0, "none")
        seconds, manifest = [], {}
        for _ in range(repeats):
            t0 = time.perf_counter()
            res = sahe_embed(H, params)
            seconds.append(time.perf_counter() - t0)
            manifest = res.manifest
    return PointResult(n, seed, seconds, peak, how, manifest["svd_matvecs"],
                       manifest["stage_seconds"])


def run_point_subprocess(n: int, seed: int = 1, repeats: int = 1, memory: bool = True,
                         threads: int = 1, timeout: float = 3600) -> PointResult:
    cmd = [sys.executable, "-m", "hyperembed.bench", "point", "--n", str(n), "--seed", str(seed),
           "--repeats", str(repeats), "--threads", str(threads)]
    if not memory:
        cmd.append("--no-memory")
    out = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout, check=True)
    d = json.loads(out.stdout.strip().splitlines()[-1])
    return PointResult(**d)


@dataclass(frozen=True)
class ScalingReport:
    sizes: list[int]
    points: list[PointResult]

    def seconds(self, n: int) -> float:
        """Median over instance seeds of the best-of-repeats time."""
        return float(np.median([p.best_seconds for p in self.points if p.n == n]))

    def peak_bytes(self, n: int) -> float:
        return float(np.median([p.peak_bytes for p in self.points
                                if p.n == n and p.memory_method != "none"]))

    def time_ratios(self) -> list[float]:
        return [self.seconds(b) / self.seconds(a) for a, b in zip(self.sizes, self.sizes[1:])]

    def memory_ratios(self) -> list[float]:
        return [self.peak_bytes(b) / self.peak_bytes(a)
                for a, b in zip(self.sizes, self.sizes[1:])]

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "seconds": [self.seconds(n) for n in self.sizes],
            "peak_bytes": [self.peak_bytes(n) for n in self.sizes],
            "time_ratios": self.time_ratios(),
            "memory_ratios": self.memory_ratios(),
            "points": [asdict(p) for p in self.points],
        }


def scaling_study(sizes=(25_000, 50_000, 100_000), seeds=(1, 2), repeats: int = 2,
                  memory_seeds=(1,), threads: int = 1) -> ScalingReport:
    points = []
    for n in sizes:
        for s in seeds:
            points.append(run_point_subprocess(n, s, repeats, memory=s in memory_seeds,
                                               threads=threads))
    return ScalingReport(list(sizes), points)


def main(argv=None) -> None:
    p = argparse.ArgumentParser(prog="python -m hyperembed.bench")
    sub = p.add_subparsers(dest="cmd", required=True)
    s = sub.add_parser("point", help="measure one instance, print JSON")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--repeats", type=int, default=1)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--no-memory", action="store_true")
    s = sub.add_parser("study", help="full scaling study, print JSON")
    s.add_argument("--sizes", type=int, nargs="+", default=[25_000, 50_000, 100_000])
    s.add_argument("--seeds", type=int, nargs="+", default=[1, 2])
    s.add_argument("--repeats", type=int, default=2)
    s.add_argument("--threads", type=int, default=1)
    args = p.parse_args(argv)
    if args.cmd == "point":
        r = run_point(args.n, args.seed, repeats=args.repeats, memory=not args.no_memory,
                      threads=args.threads)
        print(json.dumps(asdict(r)))
    else:
        rep = scaling_study(args.sizes, args.seeds, args.repeats, threads=args.threads)
        print(json.dumps(rep.to_dict(), indent=2))


if __name__ == "__main__":
    main()
