"""Command-line front end (``gf2synth``).

Exit codes: 0 success, 2 verification failure, 3 no polynomial found,
4 unreadable input (polynomial, circuit or formula text).
"""

from __future__ import annotations

import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import click

from .circuit import (
    CSV_HEADER,
    Circuit,
    CostModel,
    cost,
    export_text,
    pack_samples,
    parse_text,
    simulate_linear,
    simulate_slices,
    unpack_samples,
)
from .constmul import CACHE_PATH, best_constmul, search_candidates, synth_constmul, write_cache
from .divsynth import synth_divide, synth_square
from .errors import NoPolynomialFound, ParseError, VerificationFailed
from .linalg2 import build_constmul_matrix, build_squaring_matrix
from .mulsynth import load_formulas, synth_karatsuba_like, synth_toom3
from .polyfield import (
    PatternKind,
    PolyPattern,
    find_pattern_polys,
    format_poly,
    gf_inv,
    gf_mul,
    is_irreducible,
    parse_poly,
    poly_mul,
)

OPERATIONS = ("mul", "div", "constmul", "square", "toom3")
EXIT_VERIFY, EXIT_NO_POLY, EXIT_PARSE = 2, 3, 4
EXHAUSTIVE_MAX_M = 6


@dataclass
class JobSpec:
    m: int
    op: str = "mul"
    poly: int | None = None
    limit: int = 5
    formulas_path: str | None = None
    model: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        if self.m < 2:
            raise click.BadParameter("m must be at least 2", param_hint="--m")
        if self.op not in OPERATIONS:
            raise click.BadParameter(f"unknown operation {self.op}", param_hint="--op")
        if self.poly is not None and self.op != "toom3":
            if self.poly.bit_length() - 1 != self.m:
                raise ParseError(f"polynomial degree must be {self.m}")
            if not is_irreducible(self.poly):
                raise ParseError("polynomial is not irreducible")


def default_poly(m: int, op: str, limit: int = 5) -> int:
    """Deterministic polynomial choice: a division-friendly one for squaring
    when available, otherwise the one with the cheapest ``1 + x^ceil(m/2)``."""
    if op == "square":
        found = find_pattern_polys(m, PolyPattern(PatternKind.DIVISION_FRIENDLY), limit=1)
        if found:
            return int(found[0])
    return int(best_constmul(m, limit).poly)


def resolve_poly(job: JobSpec) -> int | None:
    if job.op == "toom3":
        return None
    return job.poly if job.poly is not None else default_poly(job.m, job.op, job.limit)


def synthesize(job: JobSpec, p: int | None) -> Circuit:
    m, model = job.m, job.model
    if job.op == "mul":
        formulas = load_formulas(job.formulas_path) if job.formulas_path else None
        return synth_karatsuba_like(m, p, formulas=formulas, model=model)
    if job.op == "div":
        return synth_divide(m, p, model=model)
    if job.op == "constmul":
        return synth_constmul(m, p, model=model)
    if job.op == "square":
        return synth_square(m, p, model=model)
    return synth_toom3(m)


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerifyReport:
    passed: bool
    cases: int
    exhaustive: bool
    method: str
    witness: str | None = None


def _register_wires(c: Circuit, m: int, names: tuple[str, ...]) -> list[list[int]]:
    if c.registers:
        try:
            return [list(c.register(n).wires) for n in names]
        except KeyError:
            pass
    return [list(range(i * m, (i + 1) * m)) for i in range(len(names))]


def _pairs(m: int, seed: int, samples: int, nonzero_b: bool) -> tuple[list[tuple[int, int]], bool]:
    lo = 1 if nonzero_b else 0
    if m <= EXHAUSTIVE_MAX_M:
        return [(a, b) for a in range(1 << m) for b in range(lo, 1 << m)], True
    rng = random.Random(seed)
    out = []
    while len(out) < samples:
        a, b = rng.getrandbits(m), rng.getrandbits(m)
        if b >= lo:
            out.append((a, b))
    return out, False


def run_verify(c: Circuit, m: int, op: str, p: int | None, seed: int = 0, samples: int = 1000) -> VerifyReport:
    """Compare ``c`` with its oracle; raises :class:`VerificationFailed`
    carrying the first failing input."""
    if op in ("constmul", "square"):
        want = build_constmul_matrix(m, p, strict=False) if op == "constmul" else build_squaring_matrix(m, p)
        got = simulate_linear(c)
        if got != want:
            bad = next(j for j in range(m) if got.column(j) != want.column(j))
            raise VerificationFailed(f"matrix column {bad} differs", witness=1 << bad)
        return VerifyReport(True, m, True, "matrix")

    if op == "toom3":
        f, g, h = _register_wires(c, m, ("f", "g", "h"))
        h = h or list(range(2 * m, 4 * m - 1))
        if len(h) != 2 * m - 1:
            h = list(range(2 * m, 4 * m - 1))
        pairs, exhaustive = _pairs(m, seed, samples, False)
        oracle = lambda a, b: int(poly_mul(a, b))
        out_len = 2 * m - 1
    else:
        f, g, h = _register_wires(c, m, ("a", "b", "c"))
        pairs, exhaustive = _pairs(m, seed, samples, op == "div")
        if op == "div":
            oracle = lambda a, b: int(gf_mul(a, gf_inv(b, p), p))
        else:
            oracle = lambda a, b: int(gf_mul(a, b, p))
        out_len = m

    inputs = []
    for a, b in pairs:
        v = 0
        for i, w in enumerate(f):
            v |= ((a >> i) & 1) << w
        for i, w in enumerate(g):
            v |= ((b >> i) & 1) << w
        inputs.append(v)
    outs = unpack_samples(simulate_slices(c, pack_samples(inputs, c.width)), len(inputs))
    for (a, b), v, o in zip(pairs, inputs, outs):
        want = v
        r = oracle(a, b)
        for i in range(out_len):
            want |= ((r >> i) & 1) << h[i]
        if o != want:
            raise VerificationFailed(f"wrong output for a=0x{a:x} b=0x{b:x}", witness=(a, b))
    return VerifyReport(True, len(pairs), exhaustive, "exhaustive" if exhaustive else "sampled")


# ---------------------------------------------------------------------------
# tables


def table_row(args: tuple[int, str, int, CostModel]) -> str:
    m, op, limit, model = args
    job = JobSpec(m, op, limit=limit, model=model)
    try:
        p = resolve_poly(job)
    except NoPolynomialFound as exc:
        return f"{m},error: {exc},,,"
    c = synthesize(job, p)
    return cost(c, model).csv_row(m, "-" if p is None else format_poly(p))


def run_table(rows: list[int], op: str, limit: int = 5, model: CostModel | None = None, jobs: int = 1) -> str:
    model = model or CostModel()
    args = [(m, op, limit, model) for m in rows]
    if jobs > 1 and len(rows) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            lines = list(pool.map(table_row, args))
    else:
        lines = [table_row(a) for a in args]
    return "\n".join([CSV_HEADER, *lines]) + "\n"


# ---------------------------------------------------------------------------
# click plumbing


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _parse_poly_opt(text: str | None) -> int | None:
    if text is None:
        return None
    return int(parse_poly(text))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _job(m, op, poly, limit, formulas, free_permutation, cost_toffoli) -> JobSpec:
    model = CostModel(toffoli_weight=cost_toffoli, free_permutation=free_permutation)
    return JobSpec(m, op, _parse_poly_opt(poly), limit, formulas, model)


def _common(f):
    opts = [
        click.option("--m", "m", type=int, required=True, help="Field degree."),
        click.option("--poly", default=None, help="Irreducible polynomial, e.g. x^4+x+1 (searched if omitted)."),
        click.option("--op", type=click.Choice(OPERATIONS), default="mul", show_default=True),
        click.option("--limit", type=int, default=5, show_default=True, help="Candidate polynomials per shape."),
        click.option("--formulas", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Extra (T,R) formula file for multiplication."),
        click.option("--free-permutation", is_flag=True, help="Trailing SWAP layers cost nothing."),
        click.option("--cost-toffoli", type=int, default=10, show_default=True, help="Toffoli weight."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ParseError as exc:
            _fail(EXIT_PARSE, str(exc))
        except NoPolynomialFound as exc:
            _fail(EXIT_NO_POLY, str(exc))


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def main() -> None:
    """Reversible circuits for GF(2^m) arithmetic."""


@main.command("find-poly")
@click.option("--m", "m", type=int, required=True)
@click.option("--pattern", type=click.Choice([k.value for k in PatternKind]), default=None,
              help="Restrict to one polynomial shape.")
@click.option("--limit", type=int, default=5, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--cache", is_flag=True, help="Rewrite the bundled candidate cache for 3..m.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def find_poly(m: int, pattern: str | None, limit: int, jobs: int, cache: bool, out: str | None) -> None:
    """List irreducible polynomials of degree m."""
    if cache:
        entries = {k: search_candidates(k, limit) for k in range(3, m + 1)}
        path = Path(out) if out else CACHE_PATH
        write_cache(entries, limit, path)
        click.echo(f"wrote {len(entries)} entries to {path}")
        return
    if pattern is None:
        found = [int(best_constmul(m, limit).poly)]
    else:
        found = [int(q) for q in find_pattern_polys(m, PolyPattern(PatternKind(pattern)), limit=limit, jobs=jobs)]
    if not found:
        _fail(EXIT_NO_POLY, f"no polynomial of degree {m} with shape {pattern}")
    _emit("".join(format_poly(q) + "\n" for q in found), out)


@main.command()
@_common
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Also write the circuit text here.")
def synth(m, poly, op, limit, formulas, free_permutation, cost_toffoli, out) -> None:
    """Build a circuit and print its cost row."""
    job = _job(m, op, poly, limit, formulas, free_permutation, cost_toffoli)
    p = resolve_poly(job)
    c = synthesize(job, p)
    if out:
        Path(out).write_text(export_text(c), encoding="utf-8")
    click.echo(CSV_HEADER)
    click.echo(cost(c, job.model).csv_row(m, "-" if p is None else format_poly(p)))


@main.command()
@_common
@click.option("--circuit", "circuit_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Verify this circuit file instead of synthesizing one.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for sampled checks.")
@click.option("--samples", type=int, default=1000, show_default=True)
def verify(m, poly, op, limit, formulas, free_permutation, cost_toffoli, circuit_path, seed, samples) -> None:
    """Check a circuit against its arithmetic oracle."""
    job = _job(m, op, poly, limit, formulas, free_permutation, cost_toffoli)
    p = resolve_poly(job)
    if circuit_path:
        c = parse_text(Path(circuit_path).read_text(encoding="utf-8"))
    else:
        c = synthesize(job, p)
    click.echo(f"# seed={seed}")
    try:
        rep = run_verify(c, m, op, p, seed=seed, samples=max(samples, 1000))
    except VerificationFailed as exc:
        click.echo(f"FAIL m={m} op={op} {exc} witness={exc.witness}")
        sys.exit(EXIT_VERIFY)
    click.echo(f"PASS m={m} op={op} {rep.method} {rep.cases}/{rep.cases}")


@main.command()
@_common
def count(m, poly, op, limit, formulas, free_permutation, cost_toffoli) -> None:
    """Print gate counts with per-phase breakdown."""
    job = _job(m, op, poly, limit, formulas, free_permutation, cost_toffoli)
    p = resolve_poly(job)
    rep = cost(synthesize(job, p), job.model)
    click.echo(CSV_HEADER)
    click.echo(rep.csv_row(m, "-" if p is None else format_poly(p)))
    for label, (tof, cn) in sorted(rep.phases.items()):
        click.echo(f"# {label}: toffoli={tof} cnot={cn}")


@main.command()
@click.option("--rows", required=True, help="Comma-separated list of m values.")
@click.option("--op", type=click.Choice(OPERATIONS), default="mul", show_default=True)
@click.option("--limit", type=int, default=5, show_default=True)
@click.option("--free-permutation", is_flag=True)
@click.option("--cost-toffoli", type=int, default=10, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def table(rows, op, limit, free_permutation, cost_toffoli, jobs, out) -> None:
    """CSV of gate counts for several m."""
    try:
        ms = [int(x) for x in rows.split(",") if x.strip()]
    except ValueError:
        raise ParseError(f"bad row list {rows!r}")
    model = CostModel(toffoli_weight=cost_toffoli, free_permutation=free_permutation)
    _emit(run_table(ms, op, limit, model, jobs), out)


@main.command()
@_common
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def export(m, poly, op, limit, formulas, free_permutation, cost_toffoli, out) -> None:
    """Write the circuit in text form."""
    job = _job(m, op, poly, limit, formulas, free_permutation, cost_toffoli)
    c = synthesize(job, resolve_poly(job))
    _emit(export_text(c), out)


if __name__ == "__main__":  # pragma: no cover
    main()
