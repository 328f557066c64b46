"""Which placement of the (-q) prefactor in the lattice sum reproduces the
Fourier coefficients of the state integral.

    python scripts/resolve_convention.py --fixture fig8 --fixture m003
"""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass, field

from qindex.errors import AmbiguousConvention
from qindex.fixtures import gluingFixture
from qindex.index3d import resolvePrefactorConvention


@dataclass
class ConventionConfig:
    fixtures: list[str] = field(default_factory=lambda: ["fig8", "m003"])
    q: float = 0.1
    order: int = 40
    grid: int = 32
    tol: float = 1e-5


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    d = ConventionConfig()
    p.add_argument("--fixture", action="append", dest="fixtures")
    p.add_argument("--q", type=float, default=d.q)
    p.add_argument("--order", type=int, default=d.order)
    p.add_argument("--grid", type=int, default=d.grid)
    p.add_argument("--tol", type=float, default=d.tol)
    a = p.parse_args()
    cfg = ConventionConfig(a.fixtures or d.fixtures, a.q, a.order, a.grid, a.tol)
    for name in cfg.fixtures:
        try:
            rep = resolvePrefactorConvention(gluingFixture(name), cfg.q, cfg.order, cfg.grid, cfg.tol)
            obj = {"fixture": name} | rep.to_json_obj()
        except AmbiguousConvention as exc:
            obj = {"fixture": name, "error": str(exc)}
        print(json.dumps(obj, indent=2), flush=True)


if __name__ == "__main__":
    main()
