"""Command-line front end.

Every command prints JSON on stdout (``--output table`` gives a short
human-readable form instead).  Library errors map to exit codes
2 (usage), 3 (input), 4 (numeric divergence) and 5 (verification failure),
with a one-line JSON diagnostic on stderr.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import click
import numpy as np

from . import fixtures, index3d, integrator, nzdata, qseries, specialfn
from .errors import QIndexError, UsageError, VerificationFailure

MAX_Q = 0.3
MAX_ORDER = 64


def _plain(o):
    """JSON fallback for numpy scalars."""
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _emit(obj, output: str, table: str | None = None) -> None:
    if output == "table" and table is not None:
        click.echo(table)
    else:
        click.echo(json.dumps(obj, indent=2, default=_plain))


def _parse_q(text: str, unsafe: bool) -> complex:
    try:
        q = complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"cannot parse q={text!r}") from exc
    if q == 0:
        raise UsageError("q must be nonzero")
    if abs(q) > MAX_Q and not unsafe:
        raise UsageError(f"|q| = {abs(q):.3g} exceeds {MAX_Q}; pass --unsafe-q to allow it")
    if abs(q) >= 1:
        raise UsageError("|q| must be below 1")
    return q


def _check_order(order: int, unsafe: bool) -> None:
    if order <= 0:
        raise UsageError("order must be positive")
    if order > MAX_ORDER and not unsafe:
        raise UsageError(f"order {order} exceeds {MAX_ORDER}; pass --unsafe-order to allow it")


def _parse_unit(text: str) -> complex:
    """A complex number, or 'angle:<t>' for exp(2 pi i t)."""
    try:
        if text.startswith("angle:"):
            return complex(np.exp(2j * math.pi * float(text[6:])))
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"cannot parse {text!r} as a complex number") from exc


def _load_gluing(target: str) -> nzdata.GluingData:
    """A builtin fixture name, or a path to a gluing JSON file."""
    p = Path(target)
    if p.suffix == ".json" or p.exists():
        try:
            text = p.read_text()
        except OSError as exc:
            raise nzdata.MalformedInput(f"cannot read {target}: {exc}") from exc
        return nzdata.parseGluing(text, p.stem)
    return fixtures.gluingFixture(target)


def _output_option(f):
    """Per-command --output, overriding the group-level choice."""

    def store(ctx, param, value):
        if value is not None:
            ctx.ensure_object(dict)["output"] = value
        return value

    return click.option("--output", type=click.Choice(["json", "table"]), default=None, expose_value=False, callback=store)(f)


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except QIndexError as exc:
            click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc)}), err=True)
            ctx.exit(exc.exit_code)


@click.group(cls=_Group)
@click.option("--threads", type=int, default=None, help="Worker threads for grid evaluation (default QINDEX_THREADS or 1).")
@click.option("--output", type=click.Choice(["json", "table"]), default="json")
@click.pass_context
def main(ctx, threads, output):
    """Tetrahedron indices, state integrals and 3D-index coefficients."""
    ctx.ensure_object(dict)
    if threads is not None and threads < 1:
        raise click.BadParameter("--threads must be positive")
    ctx.obj["threads"] = threads if threads is not None else integrator.defaultThreads()
    ctx.obj["output"] = output


@main.command()
@click.argument("m", type=int)
@click.argument("e", type=int)
@click.option("--order", type=int, default=20, show_default=True, help="Truncation in half-units of q.")
@click.option("--hat", is_flag=True, help="Print (-q)^e I_Delta(m,e)(q^2) instead.")
@click.option("--unsafe-order", is_flag=True)
@_output_option
@click.pass_context
def tetindex(ctx, m, e, order, hat, unsafe_order):
    """Tetrahedron index I_Delta(M, E) as a truncated q-series."""
    _check_order(order, unsafe_order)
    s = qseries.iDeltaHat(m, e, order) if hat else qseries.tetIndexSeries(m, e, order)
    obj = {"m": m, "e": e, "hat": hat, "series": s.to_json_obj(), "pretty": s.pretty()}
    _emit(obj, ctx.obj["output"], s.pretty())


@main.command("index3d")
@click.argument("target")
@click.argument("m", type=int)
@click.argument("e", type=int)
@click.option("--order", type=int, default=24, show_default=True, help="Truncation in half-units of q.")
@click.option(
    "--convention",
    type=click.Choice(list(index3d.CONVENTIONS) + ["auto"]),
    default=index3d.DEFAULT_CONVENTION,
    show_default=True,
    help="Placement of the (-q) prefactor; 'auto' settles it against the Fourier coefficients at q=0.1.",
)
@click.option("--shell-cap", type=int, default=index3d.DEFAULT_SHELL_CAP, show_default=True)
@click.option("--unsafe-order", is_flag=True)
@_output_option
@click.pass_context
def index3d_cmd(ctx, target, m, e, order, convention, shell_cap, unsafe_order):
    """Lattice-sum 3D-index coefficient of s^M t^E for a fixture or gluing file."""
    _check_order(order, unsafe_order)
    g = _load_gluing(target)
    resolved = None
    if convention == "auto":
        resolved = index3d.resolvePrefactorConvention(g)
        convention = resolved.convention
    r = index3d.latticeIndex(g, m, e, order, convention, shell_cap)
    obj = r.to_json_obj()
    obj["pretty"] = r.series.pretty()
    if resolved is not None:
        obj["conventionCheck"] = resolved.to_json_obj()
    _emit(obj, ctx.obj["output"], f"I({m},{e}) = {r.series.pretty()}  [{convention}, {r.shells} shells]")


@main.command()
@click.argument("target")
@click.option("--q", "qtext", default="0.1", show_default=True)
@click.option("--s", "stext", default="1", show_default=True, help="Meridian variable; 'angle:t' means exp(2 pi i t).")
@click.option("--t", "ttext", default="1", show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--max-grid", type=int, default=1024, show_default=True)
@click.option("--reference", is_flag=True, help="Integrate the hand-derived fixture integrand instead.")
@click.option("--unsafe-q", is_flag=True)
@_output_option
@click.pass_context
def integral(ctx, target, qtext, stext, ttext, tol, max_grid, reference, unsafe_q):
    """State integral of a fixture or gluing file at (s, t)."""
    q = _parse_q(qtext, unsafe_q)
    s, t = _parse_unit(stext), _parse_unit(ttext)
    qc = specialfn.QContext(q)
    bi = fixtures.referenceIntegrand(target) if reference else nzdata.compileIntegrand(_load_gluing(target))
    c = integrator.defaultContour(bi, qc, s, t, maxGrid=max_grid)
    r = integrator.evalIntegral(bi, qc, s, t, contour=c, tol=tol, threads=ctx.obj["threads"])
    obj = r.to_json_obj()
    obj["integrand"] = bi.describe()
    v = r.value
    _emit(obj, ctx.obj["output"], f"I = {v.real:.15g} {v.imag:+.15g}i  (err {r.estErr:.2e}, grid {r.gridUsed})")


@main.command()
@click.argument("target")
@click.option("--q", "qtext", default="0.1", show_default=True)
@click.option("--mmax", type=int, default=2, show_default=True)
@click.option("--emax", type=int, default=2, show_default=True)
@click.option("--grid", type=int, default=32, show_default=True)
@click.option("--unsafe-q", is_flag=True)
@_output_option
@click.pass_context
def fourier(ctx, target, qtext, mmax, emax, grid, unsafe_q):
    """Fourier coefficients of the state integral on the unit torus."""
    q = _parse_q(qtext, unsafe_q)
    if grid < 1:
        raise UsageError("grid must be positive")
    g = _load_gluing(target)
    fg = index3d.fourierGrid(g, q, grid, threads=ctx.obj["threads"])
    rows = []
    for m in range(-mmax, mmax + 1):
        for e in range(-emax, emax + 1):
            rows.append({"m": m, "e": e, "value": integrator.complexJson(fg.coefficient(m, e))})
    obj = {
        "name": g.name,
        "q": integrator.complexJson(q),
        "grid": grid,
        "rootOrders": [fg.ds, fg.dt],
        "fractionalMass": float(f"{fg.oddPart():.3g}"),
        "estErr": float(f"{fg.maxErr:.3g}"),
        "contour": fg.contour.to_json_obj(),
        "entries": rows,
    }
    table = "\n".join(f"{r['m']:>3} {r['e']:>3}  {r['value']['re']:.15g}" for r in rows)
    _emit(obj, ctx.obj["output"], table)


SUITES = ("pentagon-series", "symmetries", "dopsum", "psi0", "inversion", "pentagon-integral", "thm2")


def runSuite(suite: str, order: int | None, bound: int | None, qtext: str, samples: int | None, seed: int, threads: int) -> dict:
    """Run one verification suite and return its JSON report (with a 'passed' key)."""
    q = complex(qtext.replace("i", "j"))
    if suite == "pentagon-series":
        return qseries.verifyPentagonSeries(order or 10, 2 if bound is None else bound).to_json_obj()
    if suite == "symmetries":
        return qseries.verifySymmetries(order or 20, 5 if bound is None else bound).to_json_obj()
    ctx = specialfn.QContext(q)
    if suite == "dopsum":
        reps = []
        for qq in ([q] if qtext != "default" else [0.1, 0.2, 0.1 + 0.05j]):
            c = specialfn.QContext(qq)
            reps += [specialfn.verifyDopsum(c, samples or 100, seed), specialfn.verifyTripleProduct(c, samples or 100, seed)]
        return {"suite": "dopsum", "passed": all(r.passed for r in reps), "reports": [r.to_json_obj() for r in reps]}
    if suite == "psi0":
        return specialfn.verifyPsi0(ctx, samples or 50, seed).to_json_obj()
    if suite == "inversion":
        return specialfn.verifyInversion(ctx, samples or 200, 5 if bound is None else bound, seed).to_json_obj()
    if suite == "pentagon-integral":
        rng = np.random.default_rng(seed)
        sets = [integrator.compatibleAngles(*([math.pi / 7] * 5))]
        sets += [integrator.randomCompatibleAngles(rng) for _ in range(samples or 20)]
        reps = []
        for k, angles in enumerate(sets):
            pts = [1.0] * 4 if k == 0 else list(np.exp(2j * math.pi * rng.random(4)))
            reps.append(integrator.verifyPentagonIntegral(ctx, angles, *pts))
        return {
            "suite": "pentagon-integral",
            "passed": all(r.passed for r in reps),
            "checked": len(reps),
            "maxRelErr": max(r.relErr for r in reps),
        }
    if suite == "thm2":
        cvs = [index3d.crossValidate(fixtures.gluingFixture(n), q, 2 if bound is None else bound, threads=threads) for n in ("fig8", "m003")]
        return {"suite": "thm2", "passed": all(c.passed() for c in cvs), "checks": [c.to_json_obj() for c in cvs]}
    raise UsageError(f"unknown suite {suite!r}")


@main.command()
@click.argument("suite", type=click.Choice(SUITES))
@click.option("--order", type=int, default=None, help="Series order in powers of q (series suites).")
@click.option("--bound", type=int, default=None, help="Charge bound |m|, |e| (series suites, thm2).")
@click.option("--q", "qtext", default="0.1", show_default=True)
@click.option("--samples", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--unsafe-q", is_flag=True)
@click.option("--unsafe-order", is_flag=True)
@_output_option
@click.pass_context
def verify(ctx, suite, order, bound, qtext, samples, seed, unsafe_q, unsafe_order):
    """Run a named identity check; exits 5 when it fails."""
    if qtext != "default":
        _parse_q(qtext, unsafe_q)
    if order is not None:
        _check_order(order, unsafe_order)
    rep = runSuite(suite, order, bound, qtext, samples, seed, ctx.obj["threads"])
    _emit(rep, ctx.obj["output"], f"{suite}: {'PASS' if rep['passed'] else 'FAIL'}")
    if not rep["passed"]:
        raise VerificationFailure(f"suite {suite} failed")


@main.group()
def examples():
    """Builtin triangulations."""


@examples.command("list")
@_output_option
@click.pass_context
def examples_list(ctx):
    rows = [{"name": n, "tetrahedra": fixtures.GLUING_ROWS[n][0], "description": fixtures.DESCRIPTIONS[n]} for n in fixtures.fixtureNames()]
    aliases = {a: c for a, c in fixtures.ALIASES.items()}
    table = "\n".join(f"{r['name']:<18} n={r['tetrahedra']}  {r['description']}" for r in rows)
    _emit({"fixtures": rows, "aliases": aliases}, ctx.obj["output"], table)


def runExample(name: str, threads: int = 1, seed: int = 0) -> dict:
    """Compile a fixture, compare with its reference integrand and evaluate it.

    The unknot additionally checks that its integral vanishes at q = 0.2;
    cPcbbbdei reports its singular rays and the lattice-sum diagnostic.
    """
    name = fixtures.canonicalName(name)
    g = fixtures.gluingFixture(name)
    bi = nzdata.compileIntegrand(g)
    ref = fixtures.referenceIntegrand(name)
    q = 0.1
    ctx = specialfn.QContext(q)
    cmp = integrator.compareIntegrands(bi, ref, ctx, samples=10, seed=seed)
    out = {"name": name, "integrand": bi.describe(), "reference": cmp.to_json_obj(), "checks": {}}
    out["checks"]["matchesReference"] = cmp.ok(1e-9 if bi.dim < 3 else 1e-6)
    rng = np.random.default_rng(seed)
    if name == "unknot-cMcabbgds":
        c2 = specialfn.QContext(0.2)
        vals = []
        for _ in range(10):
            s, t = np.exp(2j * math.pi * rng.random(2))
            vals.append(abs(integrator.evalIntegral(bi, c2, s, t, threads=threads).value))
        out["maxAbsIntegral"] = max(vals)
        out["checks"]["vanishes"] = max(vals) < 1e-8
    else:
        s, t = np.exp(2j * math.pi * rng.random(2))
        try:
            r = integrator.evalIntegral(bi, ctx, s, t, threads=threads)
            out["integral"] = {"s": integrator.complexJson(s), "t": integrator.complexJson(t), **r.to_json_obj()}
        except QIndexError as exc:
            out["integral"] = {"error": type(exc).__name__, "message": str(exc)}
    if name == "cPcbbbdei":
        out["singularRays"] = [list(map(str, r.as_tuple())) for r in nzdata.singularityRays(bi)]
        try:
            index3d.latticeIndex(g, 0, 0, 12)
            out["checks"]["indexDiagnostic"] = False
        except QIndexError as exc:
            out["indexDiagnostic"] = {"error": type(exc).__name__, "exitCode": exc.exit_code, "message": str(exc)}
            out["checks"]["indexDiagnostic"] = exc.exit_code == 4
    out["passed"] = all(out["checks"].values())
    return out


@examples.command("run")
@click.argument("name")
@_output_option
@click.pass_context
def examples_run(ctx, name):
    """Run the checks attached to fixture NAME; exits 5 when one fails."""
    rep = runExample(name, ctx.obj["threads"])
    lines = [f"{rep['name']}: {'PASS' if rep['passed'] else 'FAIL'}"]
    lines += [f"  {k}: {'PASS' if v else 'FAIL'}" for k, v in rep["checks"].items()]
    if "maxAbsIntegral" in rep:
        lines.append(f"  |I| <= {rep['maxAbsIntegral']:.3e}")
    _emit(rep, ctx.obj["output"], "\n".join(lines))
    if not rep["passed"]:
        raise VerificationFailure(f"example {rep['name']} failed: " + ", ".join(k for k, v in rep["checks"].items() if not v))


if __name__ == "__main__":  # pragma: no cover
    main()
