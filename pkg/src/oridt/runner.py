from __future__ import annotations

import argparse
import logging
import re
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from pydantic import BaseModel

from . import __version__
from .config import (
    DeltaReport,
    Difference,
    DilogReport,
    ErrorBody,
    ErrorReport,
    FactorizeReport,
    OmegaEntry,
    OracleReport,
    OracleSettings,
    PrimeCount,
    RunConfig,
    SchemaReport,
    SectorCount,
    SeriesReport,
    Term,
    ValidateReport,
    WallcrossReport,
    load_config,
    schemas,
)
from .engine import (
    SeriesCache,
    dt_factorize,
    orientifold_series,
    oridt_factorize,
    primitive_wcf,
    round_trip,
    semistable_series,
    total_series,
    wallcross_check,
)
from .exceptions import ConfigError, GoldenMismatchError, OridtError
from .identities import IDENTITIES, check_identity
from .oracle import PrimeFieldCtx, census, formula_count, stack_count
from .quiver import QuiverWithDuality, Stability, is_finite_type, validate
from .scalar import VARIABLE_NOTE

log = logging.getLogger("oridt")

LOG_LEVELS = ("quiet", "normal", "verbose", "debug")


def setup_logging(level: str) -> logging.Logger:
    """Configure the root logger for one of the four CLI levels; logs go to stderr."""
    if level == "quiet":
        log_level = logging.WARNING
        format_str = "%(levelname)s %(message)s"
    elif level == "verbose":
        log_level = logging.DEBUG
        format_str = "%(asctime)s %(levelname)s %(name)s: %(message)s"
    elif level == "debug":
        log_level = logging.DEBUG
        format_str = "%(asctime)s %(levelname)s %(name)s %(funcName)s:%(lineno)d %(message)s"
    else:
        log_level = logging.INFO
        format_str = "%(asctime)s %(levelname)s %(name)s: %(message)s"
    logging.basicConfig(level=log_level, format=format_str, stream=sys.stderr, force=True)
    return log


def parse_vector(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


MAX_BOUND = 12


def check_bound(bound: int) -> int:
    if not 0 <= bound <= MAX_BOUND:
        raise ConfigError(f"bound {bound} outside 0..{MAX_BOUND}")
    return bound


# context

class Context:
    """Validated config plus the quiver, cache and oracle settings of one invocation."""

    def __init__(self, args: argparse.Namespace) -> None:
        if not args.config:
            raise ConfigError(f"command {args.command} needs --config")
        self.config: RunConfig = load_config(args.config)
        self.quiver: QuiverWithDuality = validate(self.config.quiver)
        self.cache = SeriesCache.from_env(self.quiver)
        settings = self.config.oracle
        if args.workers is not None:
            settings = settings.model_copy(update={"workers": args.workers})
        self.oracle: OracleSettings = settings

    def stability(self, name: Optional[str]) -> Stability:
        if name is None:
            raise ConfigError("a stability name is required (--theta)")
        try:
            spec = self.config.stabilities[name]
        except KeyError:
            raise ConfigError(f"unknown stability {name!r}; known: {sorted(self.config.stabilities)}") from None
        return self.quiver.stability(spec)

    def bound(self, value: Optional[int]) -> int:
        return check_bound(self.config.bound if value is None else value)

    def dim(self, values: list[int]) -> tuple[int, ...]:
        return self.quiver.dim(values)


def _terms(series) -> list[Term]:
    return [Term(dim=d, value=v) for d, v in series.render()]


def _difference(diff) -> Optional[Difference]:
    if diff is None:
        return None
    d, left, right = diff
    return Difference(dim=list(d), left=str(left), right=str(right))


def _fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# commands; each returns (report, exit code, one-line summary)

Result = tuple[BaseModel, int, str]


def cmd_validate(args: argparse.Namespace) -> Result:
    ctx = Context(args)
    q = ctx.quiver
    verdict = is_finite_type(q)
    parts = q.partitions()
    report = ValidateReport(
        valid=True,
        nodes=list(q.nodes),
        node_partition=parts["nodes"],
        arrow_partition=parts["arrows"],
        finite_type=verdict.finite,
        components=list(verdict.components),
        duality_class=verdict.duality_class,
        hyperbolic=verdict.hyperbolic,
    )
    kind = "finite type " + "+".join(verdict.components) if verdict.finite else "not of finite type"
    return report, 0, f"valid quiver with {q.size} nodes, {kind}"


def cmd_series(args: argparse.Namespace) -> Result:
    ctx = Context(args)
    bound = ctx.bound(args.bound)
    q = ctx.quiver
    theta = None
    if args.kind == "total":
        series = total_series(q, bound, ctx.cache)
    else:
        theta = ctx.stability(args.theta)
        ctx.cache.warm(theta, bound, ctx.oracle.workers)
        if args.kind == "semistable":
            series = semistable_series(q, theta, bound, ctx.cache)
        else:
            series = orientifold_series(q, theta, bound, ctx.cache)
    ctx.cache.save()
    report = SeriesReport(kind=args.kind, theta=args.theta if theta is not None else None, bound=bound,
                          variable=VARIABLE_NOTE, terms=_terms(series))
    return report, 0, f"{args.kind} series: {len(report.terms)} nonzero terms through total dimension {bound}"


def cmd_wallcross(args: argparse.Namespace) -> Result:
    ctx = Context(args)
    if not args.theta or len(args.theta) != 2:
        raise ConfigError("wallcross needs exactly two --theta names")
    bound = ctx.bound(args.bound)
    left, right = (ctx.stability(name) for name in args.theta)
    result = wallcross_check(ctx.quiver, left, right, bound, ctx.cache)
    ctx.cache.save()
    if result.equal:
        summary = f"equal through total dimension {bound}"
    else:
        summary = f"differ at {ctx.quiver.format_dim(result.first_difference[0])}"
    report = WallcrossReport(thetas=list(args.theta), bound=bound, equal=result.equal,
                             first_difference=_difference(result.first_difference), summary=summary)
    return report, 0 if result.equal else 1, summary


def _entries(table: dict) -> list[OmegaEntry]:
    return [OmegaEntry(dim=list(d), omega=n) for d, n in sorted(table.items())]


def cmd_factorize(args: argparse.Namespace) -> Result:
    ctx = Context(args)
    bound = ctx.bound(args.bound)
    theta = ctx.stability(args.theta)
    q = ctx.quiver
    if args.orientifold:
        table = oridt_factorize(q, theta, bound, ctx.cache)
    else:
        table = dt_factorize(q, theta, bound, ctx.cache)
    ok = round_trip(table, ctx.cache, orientifold=args.orientifold)
    ctx.cache.save()
    report = FactorizeReport(
        theta=args.theta,
        bound=bound,
        orientifold=args.orientifold,
        omega=_entries(table.omega),
        sigma_omega=_entries(table.sigma_omega),
        finite_type=bool(table.finite_type and table.finite_type.finite),
        sigma_generic=bool(table.genericity and table.genericity.generic),
        round_trip=ok,
        nonnegative=table.nonnegative,
        warnings=table.warnings,
    )
    summary = f"{len(table.omega)} nonzero Omega"
    if args.orientifold:
        summary += f", {len(table.sigma_omega)} nonzero Omega^sigma"
    if not ok:
        summary += ", re-expansion differs"
    if not table.nonnegative:
        summary += f", negative Omega^sigma at {', '.join(q.format_dim(e) for e in table.negative)}"
    return report, 0 if ok and table.nonnegative else 1, summary


def _count_at(ctx: Context, theta: Stability, dim: tuple[int, ...], p: int, selfdual: bool,
              with_census: bool) -> PrimeCount:
    field = PrimeFieldCtx.create(p, ctx.oracle.max_prime)
    count = stack_count(ctx.quiver, theta, dim, field, selfdual, ctx.oracle)
    formula = formula_count(ctx.quiver, theta, dim, field.p, selfdual, ctx.cache)
    classes = None
    if with_census:
        classes = len(census(ctx.quiver, dim, field, selfdual, theta, ctx.oracle))
    return PrimeCount(
        prime=field.p,
        formula=_fraction(formula),
        oracle=_fraction(count.value),
        match=count.value == formula,
        sectors=[SectorCount(label=s.label, points=s.points, semistable=s.semistable, group_order=s.group_order)
                 for s in count.sectors],
        classes=classes,
    )


def cmd_oracle(args: argparse.Namespace) -> Result:
    ctx = Context(args)
    theta = ctx.stability(args.theta)
    dim = ctx.dim(args.dim)
    selfdual = not args.ordinary
    primes = [args.prime] if args.prime is not None else ctx.oracle.primes
    if not primes:
        raise ConfigError("no primes given (--prime or oracle.primes)")
    results = [_count_at(ctx, theta, dim, p, selfdual, args.census) for p in primes]
    ctx.cache.save()
    match = all(r.match for r in results)
    report = OracleReport(theta=args.theta, dim=list(dim), selfdual=selfdual, results=results, match=match)
    summary = "; ".join(f"p={r.prime} {ctx.quiver.format_dim(dim)}: formula {r.formula}, oracle {r.oracle}"
                        for r in results)
    return report, 0 if match else 1, summary + ("" if match else " MISMATCH")


def cmd_dilog(args: argparse.Namespace) -> Result:
    bound = check_bound(6 if args.bound is None else args.bound)
    result = check_identity(args.identity, bound)
    if result.equal:
        summary = f"equal through total dimension {bound}"
    else:
        summary = f"differ at {list(result.first_difference[0])}"
    report = DilogReport(identity=args.identity, bound=bound, equal=result.equal,
                         first_difference=_difference(result.first_difference), summary=summary)
    return report, 0 if result.equal else 1, summary


def cmd_delta(args: argparse.Namespace) -> Result:
    ctx = Context(args)
    theta = ctx.stability(args.theta)
    d, e = ctx.dim(args.d), ctx.dim(args.e)
    q = ctx.quiver
    bound = max(sum(d), sum(e), 1)
    omega_d = dt_factorize(q, theta, bound, ctx.cache, check=False).omega.get(d, 0)
    sigma_omega_e = oridt_factorize(q, theta, bound, ctx.cache).sigma_omega.get(e, 0)
    ctx.cache.save()
    index, delta = primitive_wcf(q, d, e, omega_d, sigma_omega_e)
    report = DeltaReport(d=list(d), e=list(e), theta=args.theta, I=index,
                         omega_d=omega_d, sigma_omega_e=sigma_omega_e, delta=delta)
    return report, 0, f"I = {index}, Delta Omega^sigma = {delta}"


def cmd_schema(args: argparse.Namespace) -> Result:
    return SchemaReport(schemas=schemas()), 0, f"{len(schemas())} schemas"


COMMANDS: dict[str, Callable[[argparse.Namespace], Result]] = {
    "validate": cmd_validate,
    "series": cmd_series,
    "wallcross": cmd_wallcross,
    "factorize": cmd_factorize,
    "oracle": cmd_oracle,
    "dilog": cmd_dilog,
    "delta": cmd_delta,
    "schema": cmd_schema,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="Run configuration (JSON)")
    common.add_argument("--log-level", "-l", choices=LOG_LEVELS, default="normal",
                        help="Set logging level (default: normal)")
    common.add_argument("--golden", metavar="DIR", help="Compare the report with a stored golden file")
    common.add_argument("--write-golden", action="store_true", help="Write missing or changed golden files")
    common.add_argument("--workers", type=int, help="Worker threads for enumeration (overrides the config)")

    parser = argparse.ArgumentParser(
        prog="oridt",
        description="Orientifold DT invariants of quivers with involution",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s validate -c a2.json
  %(prog)s series -c a2.json --kind orientifold --theta plus --bound 2
  %(prog)s dilog --identity a2-symplectic --bound 4
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="Validate the quiver and classify it")

    p = sub.add_parser("series", parents=[common], help="Print a generating series")
    p.add_argument("--kind", choices=["total", "semistable", "orientifold"], required=True)
    p.add_argument("--theta", help="Stability name from the config")
    p.add_argument("--bound", type=int)

    p = sub.add_parser("wallcross", parents=[common], help="Compare wall-crossed products of two stabilities")
    p.add_argument("--theta", action="append", required=True)
    p.add_argument("--bound", type=int)

    p = sub.add_parser("factorize", parents=[common], help="Extract DT (and orientifold DT) invariants")
    p.add_argument("--theta", required=True)
    p.add_argument("--bound", type=int)
    p.add_argument("--orientifold", action="store_true")

    p = sub.add_parser("oracle", parents=[common], help="Brute-force stack count over F_p")
    p.add_argument("--theta", required=True)
    p.add_argument("--prime", type=int, help="Prime to count over (default: the primes in the config)")
    p.add_argument("--dim", type=parse_vector, required=True)
    p.add_argument("--ordinary", action="store_true", help="Count ordinary instead of self-dual points")
    p.add_argument("--census", action="store_true", help="Also count isomorphism classes")

    p = sub.add_parser("dilog", parents=[common], help="Check a built-in dilogarithm identity")
    p.add_argument("--identity", choices=sorted(IDENTITIES), required=True)
    p.add_argument("--bound", type=int)

    p = sub.add_parser("delta", parents=[common], help="Primitive orientifold wall-crossing jump")
    p.add_argument("--d", type=parse_vector, required=True)
    p.add_argument("--e", type=parse_vector, required=True)
    p.add_argument("--theta", required=True)

    sub.add_parser("schema", parents=[common], help="Print the JSON schemas of the config and reports")
    return parser


def _golden_name(args: argparse.Namespace) -> str:
    parts = [args.command]
    for key in ("kind", "identity", "theta", "prime", "dim", "d", "e", "bound"):
        value = getattr(args, key, None)
        if value is None or value is False:
            continue
        if isinstance(value, list):
            value = "-".join(str(x) for x in value)
        parts.append(str(value))
    for flag in ("orientifold", "ordinary", "census"):
        if getattr(args, flag, False):
            parts.append(flag)
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", "_".join(parts)) + ".json"


def check_golden(text: str, directory: str, name: str, write: bool) -> None:
    path = Path(directory) / name
    if path.exists() and path.read_text(encoding="utf-8") == text:
        return
    if write:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        log.info("Wrote golden file %s", path)
        return
    if not path.exists():
        raise GoldenMismatchError(f"golden file {path} is missing", str(path))
    raise GoldenMismatchError(f"report differs from golden file {path}", str(path))


def render(report: BaseModel) -> str:
    return report.model_dump_json(indent=2) + "\n"


def _emit_error(command: str, exc: Exception, details: dict) -> None:
    report = ErrorReport(command=command, error=ErrorBody(type=type(exc).__name__, message=str(exc), details=details))
    sys.stdout.write(render(report))


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    try:
        report, code, summary = COMMANDS[args.command](args)
        text = render(report)
        if args.golden:
            check_golden(text, args.golden, _golden_name(args), args.write_golden)
        sys.stdout.write(text)
        if args.log_level != "quiet":
            print(f"{args.command}: {summary}", file=sys.stderr)
        return code
    except KeyboardInterrupt:
        return 130
    except OridtError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        _emit_error(args.command, exc, exc.details())
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - top-level CLI boundary
        log.exception("Unhandled error: %s", exc)
        _emit_error(args.command, exc, {})
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
