"""Compiled integrands against the hand-written reference integrands.

For each fixture prints the monomial change of variables found, the
pointwise relative error at random unit (s, t), and, when the factor sets
differ, the compiled factor and the reference factor that fail to pair up
(both written in the reference variables).

    python scripts/compare_fixtures.py
    python scripts/compare_fixtures.py --fixture k6_1 --samples 40 --integrals
"""

from __future__ import annotations

import argparse
import json
from collections import Counter
from dataclasses import dataclass, field

from qindex.fixtures import fixtureNames, gluingFixture, referenceIntegrand
from qindex.integrator import compareIntegrands
from qindex.nzdata import compileIntegrand, mapFactors
from qindex.specialfn import QContext


@dataclass
class CompareConfig:
    fixtures: list[str] = field(default_factory=fixtureNames)
    q: float = 0.1
    samples: int = 20
    seed: int = 0
    integrals: bool = False


def _fmt(mon, pre) -> str:
    return json.dumps({"monomial": list(mon), "prefactor": [str(x) for x in pre]})


def compare(name: str, cfg: CompareConfig) -> dict:
    src = compileIntegrand(gluingFixture(name))
    ref = referenceIntegrand(name)
    rep = compareIntegrands(src, ref, QContext(cfg.q), cfg.samples, cfg.seed, cfg.integrals)
    out = rep.to_json_obj()
    if rep.variableMap is not None and not rep.variableMap.exact:
        mine = Counter(mapFactors(src, rep.variableMap))
        theirs = Counter((f.monomial, tuple(f.prefactor)) for f in ref.allFactors)
        out["compiledOnly"] = [_fmt(*k) for k in (mine - theirs)]
        out["referenceOnly"] = [_fmt(*k) for k in (theirs - mine)]
    return out


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    d = CompareConfig()
    p.add_argument("--fixture", action="append", dest="fixtures")
    p.add_argument("--q", type=float, default=d.q)
    p.add_argument("--samples", type=int, default=d.samples)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--integrals", action="store_true")
    a = p.parse_args()
    cfg = CompareConfig(a.fixtures or d.fixtures, a.q, a.samples, a.seed, a.integrals)
    for name in cfg.fixtures:
        print(json.dumps(compare(name, cfg), indent=2, default=float), flush=True)


if __name__ == "__main__":
    main()
