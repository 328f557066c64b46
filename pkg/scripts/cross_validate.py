"""Fourier coefficients of the state integral against lattice sums.

    python scripts/cross_validate.py --fixture fig8 --fixture m003 --grid 32 --bound 2

Writes one JSON object per fixture (to stdout, or --out DIR/<name>.json).
"""

from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from qindex.fixtures import gluingFixture
from qindex.index3d import crossValidate


@dataclass
class CrossValidationConfig:
    fixtures: list[str] = field(default_factory=lambda: ["fig8", "m003"])
    q: float = 0.1
    grid: int = 32
    bound: int = 2
    order: int = 48
    threads: int = 1
    out: str | None = None


def parse_args() -> CrossValidationConfig:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    d = CrossValidationConfig()
    p.add_argument("--fixture", action="append", dest="fixtures")
    p.add_argument("--q", type=float, default=d.q)
    p.add_argument("--grid", type=int, default=d.grid)
    p.add_argument("--bound", type=int, default=d.bound)
    p.add_argument("--order", type=int, default=d.order, help="lattice truncation in half-units")
    p.add_argument("--threads", type=int, default=d.threads)
    p.add_argument("--out")
    a = p.parse_args()
    return CrossValidationConfig(a.fixtures or d.fixtures, a.q, a.grid, a.bound, a.order, a.threads, a.out)


def main() -> None:
    cfg = parse_args()
    for name in cfg.fixtures:
        t0 = time.perf_counter()
        cv = crossValidate(gluingFixture(name), cfg.q, cfg.bound, cfg.grid, cfg.order, threads=cfg.threads)
        obj = cv.to_json_obj() | {"seconds": round(time.perf_counter() - t0, 2), "config": asdict(cfg)}
        text = json.dumps(obj, indent=2)
        if cfg.out:
            Path(cfg.out).mkdir(parents=True, exist_ok=True)
            Path(cfg.out, f"{name}.json").write_text(text)
        else:
            print(text)
        print(f"# {name}: max rel err {cv.maxRelErr:.3e}, {'PASS' if cv.passed() else 'FAIL'}", flush=True)


if __name__ == "__main__":
    main()
