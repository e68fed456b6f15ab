#!/usr/bin/env python3
"""
Command-line front end: analyze, solve, verify, iron, convert and plot.

stdout carries JSON (or short status lines with --format text); logging goes
to stderr.
"""

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO

from .analysis import CutoffMode, _nondecreasing_selections, analyze_conditions, find_compatible_cutoffs, initial_virtual_values, pseudo_revenues
from .duality import check_implementability, verify_certificate, virtual_values
from .errors import AmbiguousContainment, BadCutoff, FormatError, InstanceError, NoRoot, UpgradePricingError
from .ironing import iron, ironing_map
from .lp import build_revenue_lp, mechanism_from_solution, solve_lp
from .model import Instance, check_shapes, is_upgrade_menu, revenue
from .pipeline import AnalysisEngine, AnalysisReport, AnalysisStatus, batch_exit_code, default_workers, instance_files
from .pricing import NotChain, separate_to_upgrade, upgrade_to_separate
from .rational import format_decimal, format_rational, format_tuple
from .serialization import (
    certificate_to_dict,
    chain_check_to_dict,
    curves_to_dict,
    dumps,
    error_to_dict,
    flow_from_dict,
    load_instance,
    load_json,
    mechanism_from_dict,
    mechanism_to_dict,
    menu_from_dict,
    not_chain_to_dict,
    prices_from_dict,
    prices_to_dict,
    report_to_dict,
    trace_to_dict,
    verdict_to_dict,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONDITIONS_UNMET = 3
EXIT_CERTIFICATE_FAILED = 4

STATUS_LINES = {
    AnalysisStatus.CERTIFIED_OPTIMAL: ("✅", "\033[32m"),
    AnalysisStatus.CONDITIONS_UNMET: ("⚠️", "\033[33m"),
    AnalysisStatus.CERTIFICATE_FAILED: ("❌", "\033[31m"),
}
RESET = "\033[0m"


@dataclass(frozen=True)
class Settings:
    """Everything configurable, read once from argv and the environment."""
    command: str
    output_format: str = "json"
    run_lp: bool = True
    search_orders: bool = False
    dump_lp: Optional[Path] = None
    batch: Optional[Path] = None
    workers: int = 1
    verbose: bool = False
    color: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace, environ=None, stdout: Optional[TextIO] = None) -> "Settings":
        environ = os.environ if environ is None else environ
        stdout = stdout or sys.stdout
        isatty = getattr(stdout, "isatty", lambda: False)
        return cls(
            command=args.command,
            output_format=args.format,
            run_lp=not getattr(args, "no_lp", False),
            search_orders=getattr(args, "search_orders", False),
            dump_lp=getattr(args, "dump_lp", None),
            batch=getattr(args, "batch", None),
            workers=args.workers or default_workers(),
            verbose=args.verbose,
            color=isatty() and "UPL_NO_COLOR" not in environ,
        )


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="upl",
        description="Exact verifier for upgrade pricing in multiproduct monopoly screening",
    )
    parser.add_argument("--format", choices=("json", "text"), default="json")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging on stderr")
    parser.add_argument("--workers", type=positive_int, default=None, help="batch worker processes")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run the full certification pipeline")
    analyze.add_argument("instance", type=Path, nargs="?")
    analyze.add_argument("--no-lp", action="store_true", help="skip the revenue LP cross-check")
    analyze.add_argument("--search-orders", action="store_true", help="try other type orders (n <= 8)")
    analyze.add_argument("--dump-lp", type=Path, metavar="PATH")
    analyze.add_argument("--batch", type=Path, metavar="DIR", help="analyze every *.json in DIR")

    solve = sub.add_parser("solve", help="solve the revenue LP exactly")
    solve.add_argument("instance", type=Path)
    solve.add_argument("--dump-lp", type=Path, metavar="PATH")

    verify = sub.add_parser("verify", help="check IC/IR, or a full certificate with a flow")
    verify.add_argument("instance", type=Path)
    verify.add_argument("mechanism", type=Path)
    verify.add_argument("flow", type=Path, nargs="?")
    verify.add_argument("--no-lp", action="store_true")

    iron_cmd = sub.add_parser("iron", help="run the ironing algorithm and print its trace")
    iron_cmd.add_argument("instance", type=Path)

    convert = sub.add_parser("convert", help="convert between upgrade menus and separate prices")
    convert.add_argument("instance", type=Path)
    convert.add_argument("direction", choices=("to-separate", "to-upgrade"))
    convert.add_argument("input", type=Path, help="menu JSON (to-separate) or prices JSON (to-upgrade)")

    plot = sub.add_parser("plot", help="write CSV data for revenue and virtual value plots")
    plot.add_argument("instance", type=Path)
    plot.add_argument("out_dir", type=Path)
    return parser


def configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("upgrade_pricing")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)
    root.propagate = False


# Rendering

def _status_line(settings: Settings, status: AnalysisStatus, text: str) -> str:
    emoji, color = STATUS_LINES[status]
    line = f"{emoji} {text}"
    return f"{color}{line}{RESET}" if settings.color else line


def render_report_text(report: AnalysisReport, settings: Settings, name: str = "") -> str:
    prefix = f"{name}: " if name else ""
    lines = [_status_line(settings, report.status, f"{prefix}{report.status.value}")]
    if report.type_order is not None:
        lines.append(f"   type order {format_tuple(report.type_order.permutation)}")
    if report.cutoffs:
        lines.append(f"   cutoffs {tuple(report.cutoffs)} ({report.conditions.route.value})")
    if report.revenue is not None:
        lines.append(f"   revenue {format_rational(report.revenue)}")
    if report.trace is not None:
        lines.append(f"   gamma {format_tuple(report.trace.gammas())}")
    if report.certificate is not None:
        for number, name_, verdict in report.certificate.failures():
            lines.append(f"   condition {number} ({name_}) fails: {verdict.reason}")
    if report.lp_value is not None:
        gap = report.lp_gap
        gap_text = f", gap {format_rational(gap)}" if gap is not None else ""
        lines.append(f"   LP optimum {format_rational(report.lp_value)}{gap_text}")
    verdict = report.separate_pricing
    mark = "✅" if verdict else "➖"
    lines.append(f"   {mark} separate monopoly pricing: {verdict.reason}")
    if report.note:
        lines.append(f"   note: {report.note}")
    return "\n".join(lines) + "\n"


def _emit(out: TextIO, payload) -> None:
    out.write(dumps(payload))


def _write_dump(path: Path, inst: Instance) -> None:
    text = build_revenue_lp(inst).dump()
    path.write_text(text, encoding="utf-8")
    logger.info("wrote LP dump to %s", path)


# Commands

def cmd_analyze(args: argparse.Namespace, settings: Settings, out: TextIO) -> int:
    engine = AnalysisEngine(run_lp=settings.run_lp, search_orders=settings.search_orders)
    if settings.batch is not None:
        paths = instance_files(settings.batch)
        results = engine.run_batch(
            paths,
            workers=settings.workers,
            progress_callback=lambda p, m: logger.info("%3d%% %s", p, m),
        )
        if settings.output_format == "text":
            for name, result in results.items():
                if result.report:
                    out.write(render_report_text(result.report, settings, name))
                else:
                    out.write(f"❌ {name}: {result.error}\n")
        else:
            _emit(out, {
                name: report_to_dict(r.report) if r.report else {"error": r.error}
                for name, r in results.items()
            })
        return batch_exit_code(results)

    if args.instance is None:
        raise FormatError("analyze needs an instance path or --batch DIR")
    inst = load_instance(args.instance)
    if settings.dump_lp is not None:
        _write_dump(settings.dump_lp, inst)
    report = engine.analyze(inst)
    if settings.output_format == "text":
        out.write(render_report_text(report, settings))
    else:
        _emit(out, report_to_dict(report))
    return report.exit_code


def cmd_solve(args: argparse.Namespace, settings: Settings, out: TextIO) -> int:
    inst = load_instance(args.instance)
    if settings.dump_lp is not None:
        _write_dump(settings.dump_lp, inst)
    solution = solve_lp(build_revenue_lp(inst))
    if not solution.is_optimal:
        raise UpgradePricingError(f"revenue LP is {solution.status.value}")
    mechanism = mechanism_from_solution(inst, solution)
    if settings.output_format == "text":
        out.write(f"✅ LP optimum {format_rational(solution.value)} after {solution.iterations} pivots\n")
    else:
        _emit(out, {
            "optimum": format_rational(solution.value),
            "iterations": solution.iterations,
            "mechanism": mechanism_to_dict(mechanism),
        })
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, settings: Settings, out: TextIO) -> int:
    inst = load_instance(args.instance)
    mechanism = mechanism_from_dict(load_json(args.mechanism))
    check_shapes(inst, mechanism)
    rev = revenue(inst, mechanism)
    payload: Dict = {"revenue": format_rational(rev), "upgrade_menu": chain_check_to_dict(is_upgrade_menu(mechanism))}

    if args.flow is not None:
        flow = flow_from_dict(load_json(args.flow), inst.n)
        verdict = verify_certificate(inst, mechanism, flow)
        payload["certificate"] = certificate_to_dict(verdict)
        verified = verdict.overall
    else:
        implementable = check_implementability(inst, mechanism)
        payload["ic_ir"] = verdict_to_dict(implementable)
        verified = implementable.holds
        if settings.run_lp:
            solution = solve_lp(build_revenue_lp(inst))
            gap = solution.value - rev
            payload["lp"] = {"optimum": format_rational(solution.value), "gap": format_rational(gap)}
            verified = verified and gap == 0

    payload["verified"] = verified
    if settings.output_format == "text":
        mark = "✅ verified" if verified else "❌ not verified"
        out.write(f"{mark} (revenue {format_rational(rev)})\n")
        for name, entry in payload.get("certificate", {}).items():
            if isinstance(entry, dict) and not entry["holds"]:
                out.write(f"   {name}: {entry['reason']}\n")
    else:
        _emit(out, payload)
    return EXIT_OK if verified else EXIT_CERTIFICATE_FAILED


def _ironing_cutoffs(inst: Instance):
    for mode in (CutoffMode.MOSTLY_REGULAR, CutoffMode.REGULAR):
        found = find_compatible_cutoffs(inst, mode)
        if found:
            return found.cutoffs
    curves = pseudo_revenues(inst)
    pick = next(_nondecreasing_selections([curves.peaks(k) for k in inst.items()]), None)
    if pick is None:
        raise BadCutoff("pseudo-revenue peaks admit no nondecreasing cutoff vector")
    logger.warning("no compatible cutoffs, ironing against peaks %s", pick)
    return pick


def cmd_iron(args: argparse.Namespace, settings: Settings, out: TextIO) -> int:
    inst = load_instance(args.instance)
    curves = pseudo_revenues(inst)
    try:
        cutoffs = _ironing_cutoffs(inst)
        kappa = ironing_map(inst, curves, cutoffs)
        flow, trace = iron(inst, cutoffs, kappa)
    except (AmbiguousContainment, NoRoot, BadCutoff) as e:
        if settings.output_format == "text":
            out.write(f"⚠️ ironing stopped: {e}\n")
        else:
            _emit(out, error_to_dict(e))
        return EXIT_CONDITIONS_UNMET
    if settings.output_format == "text":
        out.write(f"✅ cutoffs {tuple(cutoffs)}, gamma {format_tuple(trace.gammas())}\n")
    else:
        payload = trace_to_dict(trace, kappa)
        payload["cutoffs"] = list(cutoffs)
        payload["curves"] = curves_to_dict(curves)
        _emit(out, payload)
    return EXIT_OK


def cmd_convert(args: argparse.Namespace, settings: Settings, out: TextIO) -> int:
    inst = load_instance(args.instance)
    raw = load_json(args.input)
    if args.direction == "to-separate":
        prices = upgrade_to_separate(inst, menu_from_dict(raw, inst.d))
        if settings.output_format == "text":
            out.write(f"✅ separate prices {format_tuple(prices.p)}\n")
        else:
            _emit(out, prices_to_dict(prices))
        return EXIT_OK

    result = separate_to_upgrade(inst, prices_from_dict(raw))
    if isinstance(result, NotChain):
        if settings.output_format == "text":
            out.write(
                f"⚠️ not a chain: type {result.first} buys {format_tuple(result.first_bundle)}, "
                f"type {result.second} buys {format_tuple(result.second_bundle)}\n"
            )
        else:
            _emit(out, not_chain_to_dict(result))
        return EXIT_OK
    if settings.output_format == "text":
        out.write(f"✅ chain-ordered mechanism, revenue {format_rational(revenue(inst, result))}\n")
    else:
        _emit(out, dict(mechanism_to_dict(result), chain=True))
    return EXIT_OK


def _csv_text(header: Sequence[str], rows: List[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _virtual_value_rows(phi) -> List[Sequence[str]]:
    return [
        (str(i), str(k), format_rational(v), format_decimal(v))
        for i, row in enumerate(phi, start=1)
        for k, v in enumerate(row, start=1)
    ]


def plot_files(inst: Instance) -> Dict[str, str]:
    """File name -> CSV text for every plot data file of the instance."""
    curves = pseudo_revenues(inst)
    files = {}
    for k in inst.items():
        rows = [
            (str(i), format_rational(r), format_rational(rb), format_decimal(r), format_decimal(rb))
            for i, (r, rb) in enumerate(zip(curves.curve(k), curves.closure(k)), start=1)
        ]
        files[f"pseudo_revenue_item{k}.csv"] = _csv_text(("i", "R", "Rbar", "R_f", "Rbar_f"), rows)
    files["virtual_values.csv"] = _csv_text(("i", "k", "phi", "phi_f"), _virtual_value_rows(initial_virtual_values(inst)))

    conditions = analyze_conditions(inst)
    if conditions.route is CutoffMode.MOSTLY_REGULAR:
        try:
            flow, _ = iron(inst, conditions.cutoffs)
        except (AmbiguousContainment, NoRoot) as e:
            logger.warning("no ironed virtual values: %s", e)
        else:
            files["ironed_virtual_values.csv"] = _csv_text(
                ("i", "k", "phi", "phi_f"), _virtual_value_rows(virtual_values(inst, flow).phi)
            )
    return files


def cmd_plot(args: argparse.Namespace, settings: Settings, out: TextIO) -> int:
    inst = load_instance(args.instance)
    files = plot_files(inst)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (args.out_dir / name).write_text(text, encoding="utf-8")
    if settings.output_format == "text":
        out.write(f"✅ wrote {len(files)} files to {args.out_dir}\n")
    else:
        _emit(out, {"out_dir": str(args.out_dir), "files": sorted(files)})
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "iron": cmd_iron,
    "convert": cmd_convert,
    "plot": cmd_plot,
}


def run(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None, environ=None) -> int:
    """Parse argv, run one command and return its exit code."""
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse has already printed usage or help
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    settings = Settings.from_args(args, environ=environ, stdout=out)
    configure_logging(settings.verbose)
    try:
        return COMMANDS[settings.command](args, settings, out)
    except (InstanceError, FormatError) as e:
        print(f"❌ invalid input: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_ERROR
    except UpgradePricingError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
