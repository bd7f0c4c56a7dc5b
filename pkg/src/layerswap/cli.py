"""Command-line surface: analyze, simulate, plan, sweep, predict, validate.

Every command reads a profile file (a path, or the name of a bundled
fixture; set $LAYERSWAP_FIXTURES to resolve fixture names elsewhere),
prints a report in table, CSV, or JSON form, and exits 0 on success or 1
with a single-line diagnostic on stderr. Machine-readable outputs are
deterministic: identical inputs give byte-identical output, and the CSV
and JSON renderings of one report carry identical values.
"""

import argparse
import csv as _csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import analytic, planner, predictor
from .dfbsim import Mode, Placement, SimConfig, simulate, vram_report, write_trace
from .planner import InfeasibleBudgetError
from .profile import ModelProfile, ProfileError, classify, load_profile, module_kind

FIXTURE_ENV = "LAYERSWAP_FIXTURES"

# Display rounding: milliseconds and megabytes to 1 decimal, ratios and
# percentages to 2, benefit densities and seconds to 3.
_ms = lambda v: round(v, 1)
_mb = lambda v: round(v, 1)
_r2 = lambda v: round(v, 2)
_r3 = lambda v: round(v, 3)


def bundled_fixture_dir() -> Path:
    return Path(__file__).parent / "fixtures"


def fixture_dir() -> Path:
    override = os.environ.get(FIXTURE_ENV)
    return Path(override) if override else bundled_fixture_dir()


def resolve_input(arg: str, suffix: str = ".json") -> Path:
    """Resolve a profile/data argument: as given, with the default suffix,
    or by (base)name inside the fixture directory."""
    direct = Path(arg)
    candidates = [direct, direct.with_name(direct.name + suffix)]
    fx = fixture_dir()
    candidates += [fx / direct.name, fx / (direct.name + suffix)]
    for cand in candidates:
        if cand.is_file():
            return cand
    raise ValueError(f"input file not found: {arg}")


# --- report model and renderers ----------------------------------------------


@dataclass
class Section:
    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    kv: bool = False  # two-column field/value section


@dataclass
class Report:
    sections: list[Section]


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    return str(value)


def render_table(report: Report) -> str:
    out = []
    for section in report.sections:
        out.append(f"{section.name}:")
        if section.kv:
            width = max((len(str(r[0])) for r in section.rows), default=0)
            for key, value in section.rows:
                out.append(f"  {str(key):<{width}}  {_cell(value)}")
        else:
            cells = [section.columns] + [[_cell(v) for v in row] for row in section.rows]
            widths = [max(len(row[i]) for row in cells) for i in range(len(section.columns))]
            for ri, row in enumerate(cells):
                out.append("  " + "  ".join(f"{row[i]:<{widths[i]}}" for i in range(len(row))).rstrip())
                if ri == 0:
                    out.append("  " + "  ".join("-" * w for w in widths))
        out.append("")
    return "\n".join(out)


def render_csv(report: Report) -> str:
    tabular = [s for s in report.sections if not s.kv]
    buf = io.StringIO()
    first = True
    for section in report.sections:
        if not first:
            buf.write("\n")
        first = False
        if section.kv:
            for key, value in section.rows:
                buf.write(f"# {key}: {_cell(value)}\n")
            continue
        if len(tabular) > 1:
            buf.write(f"# section: {section.name}\n")
        writer = _csv.writer(buf, lineterminator="\n")
        writer.writerow(section.columns)
        for row in section.rows:
            writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json(report: Report) -> str:
    doc = {}
    for section in report.sections:
        if section.kv:
            doc[section.name] = {str(k): v for k, v in section.rows}
        else:
            doc[section.name] = [dict(zip(section.columns, row)) for row in section.rows]
    return json.dumps(doc, indent=2) + "\n"


RENDERERS = {"table": render_table, "csv": render_csv, "json": render_json}


def emit(report: Report, fmt: str, out: str | None) -> None:
    text = RENDERERS[fmt](report)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- shared argument helpers --------------------------------------------------


def parse_k_range(spec: str) -> list[int]:
    """'0..28' -> [0, 1, ..., 28]; a single integer is a one-element range."""
    spec = spec.strip()
    if ".." in spec:
        lo_s, hi_s = spec.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise ValueError(f"bad k range '{spec}': end below start")
        return list(range(lo, hi + 1))
    return [int(spec)]


def parse_resident(pairs: list[str], p: ModelProfile) -> Placement:
    """--resident module=k entries, materialized as interleaved placements."""
    resident = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"bad --resident '{pair}': expected module=count")
        name, _, count_s = pair.partition("=")
        module = p.module(name)
        k = int(count_s)
        indices = planner.interleaved_indices(k, module.layers) if module.layers >= 2 \
            else frozenset(range(min(k, 1)))
        if k > 0:
            resident[name] = indices
    return Placement(resident)


def target_module(p: ModelProfile, requested: str | None) -> str:
    """The module to predict/sweep over: as requested, else the one with the
    highest middle-position benefit density."""
    if requested is not None:
        return p.module(requested).name
    best = max(
        p.modules,
        key=lambda m: analytic.residency_benefit(m, analytic.Position.MIDDLE).benefit_ms_per_mb,
    )
    return best.name


def vram_section(p: ModelProfile, report) -> Section:
    return Section("vram", ["field", "value"], [
        ["buffer_mb", _mb(report.buffer_mb)],
        ["resident_mb", _mb(report.resident_mb)],
        ["always_resident_mb", _mb(report.always_resident_mb)],
        ["overhead_mb", _mb(report.overhead_mb)],
        ["total_mb", _mb(report.total_mb)],
        ["hardware_vram_mb", _mb(p.hardware.vram_mb)],
        ["fits", report.fits],
    ], kv=True)


def placement_section(p: ModelProfile, placement: Placement) -> Section:
    rows = []
    for m in p.modules:
        indices = sorted(placement.for_module(m.name))
        rows.append([m.name, len(indices), ",".join(map(str, indices))])
    return Section("placement", ["module", "resident_layers", "indices"], rows)


# --- commands ----------------------------------------------------------------


def cmd_analyze(args) -> Report:
    p = load_profile(resolve_input(args.profile))

    lb = analytic.lower_bound(p)
    full = sum(analytic.module_time_full_offload(m) for m in p.modules)
    summary = Section("summary", ["field", "value"], [
        ["hardware", p.hardware.name],
        ["vram_mb", _mb(p.hardware.vram_mb)],
        ["full_offload_ms", _ms(full)],
        ["lower_bound_ms", _ms(lb.total_ms)],
    ], kv=True)

    phases = Section("phases", ["module", "phase", "repetitions", "dma_ms", "exe_ms", "ratio", "kind"])
    limits = Section("consecutive_limits", ["module", "phase", "limit"])
    for m in p.modules:
        for ph in m.phases:
            cls = classify(ph)
            phases.rows.append([
                m.name, ph.name, ph.repetitions, _ms(ph.dma_ms), _ms(ph.exe_ms),
                _r2(cls.ratio), cls.kind.value,
            ])
            if cls.kind.value == "dma-intensive":
                limits.rows.append([m.name, ph.name, analytic.consecutive_limit(ph)])

    modules = Section("modules", [
        "module", "kind", "layers", "layer_mem_mb",
        "benefit_first", "benefit_middle", "benefit_last",
    ])
    for m in p.modules:
        benefits = [analytic.residency_benefit(m, pos).benefit_ms_per_mb for pos in analytic.Position]
        modules.rows.append([
            m.name, module_kind(m).value, m.layers, _mb(m.layer_mem_mb),
            *[_r3(b) for b in benefits],
        ])

    crossover = Section("crossover", ["module", "versus", "tokens"])
    target_name = target_module(p, None)
    target = p.module(target_name)
    if analytic.residency_benefit(target, analytic.Position.MIDDLE).benefit_ms_per_mb > 0:
        for other in p.modules:
            if other.name == target_name:
                continue
            tokens = analytic.crossover_tokens(target, other)
            crossover.rows.append([target_name, other.name, tokens if tokens is not None else "never"])

    lower = Section("lower_bound", ["module", "exe_only_ms"])
    for name, ms in lb.per_module_ms.items():
        lower.rows.append([name, _ms(ms)])
    lower.rows.append(["total", _ms(lb.total_ms)])

    return Report([summary, phases, modules, limits, crossover, lower])


def _sim_config(args) -> SimConfig:
    return SimConfig(
        mode=Mode(args.mode),
        cross_invocation_prefetch=getattr(args, "prefetch", False),
        slot_count=getattr(args, "slots", 2),
    )


def cmd_simulate(args) -> Report:
    p = load_profile(resolve_input(args.profile))
    if args.plan and args.resident:
        raise ValueError("give either a plan file or --resident entries, not both")
    if args.plan:
        placement = planner.load_placement(resolve_input(args.plan))
    else:
        placement = parse_resident(args.resident or [], p)

    config = _sim_config(args)
    timeline = simulate(p, placement, config)
    vram = vram_report(p, placement, config)
    if not vram.fits:
        print(
            f"warning: placement needs {vram.total_mb:.1f} MB "
            f"but {p.hardware.name} has {p.hardware.vram_mb:.1f} MB (fits=false)",
            file=sys.stderr,
        )
    if args.trace:
        write_trace(timeline, args.trace)

    summary = Section("summary", ["field", "value"], [
        ["mode", config.mode.value],
        ["slot_count", config.slot_count],
        ["cross_invocation_prefetch", config.cross_invocation_prefetch],
        ["total_ms", _ms(timeline.total_ms)],
        ["total_s", _r3(timeline.total_ms / 1000.0)],
        ["events", len(timeline.events)],
    ], kv=True)
    return Report([summary, placement_section(p, placement), vram_section(p, vram)])


def cmd_plan(args) -> Report:
    p = load_profile(resolve_input(args.profile))
    config = SimConfig()
    plan = planner.plan_for_budget(p, args.vram_mb, config, include_simulated=True)
    if args.out:
        planner.save_plan(plan, args.out)
    if not plan.vram.fits:
        print(
            f"warning: plan needs {plan.vram.total_mb:.1f} MB "
            f"but {p.hardware.name} has {p.hardware.vram_mb:.1f} MB (fits=false)",
            file=sys.stderr,
        )
    summary = Section("summary", ["field", "value"], [
        ["budget_mb", _mb(args.vram_mb)],
        ["predicted_saving_ms", _ms(plan.predicted_saving_ms)],
        ["simulated_total_ms", _ms(plan.simulated_total_ms)],
        ["plan_file", args.out or ""],
    ], kv=True)
    return Report([summary, placement_section(p, plan.placement), vram_section(p, plan.vram)])


def cmd_sweep(args) -> Report:
    p = load_profile(resolve_input(args.profile))
    name = target_module(p, args.module)
    module = p.module(name)
    k_values = parse_k_range(args.k) if args.k else list(range(module.layers))
    config = SimConfig()

    intercept_s, _source = predictor.resolve_intercept(p, config)
    slope = predictor.slope_from_profile(module)
    points = planner.sweep(p, name, k_values, config)
    predictions = predictor.predict(intercept_s, slope, k_values)

    section = Section("sweep", ["k", "vram_total_mb", "simulated_s", "predicted_s"])
    for point, pred in zip(points, predictions):
        section.rows.append([
            point.k, _mb(point.vram_total_mb),
            _r3(point.simulated_total_ms / 1000.0), _r3(pred.predicted_s),
        ])
    return Report([section])


def _fixed_mb(p: ModelProfile, config: SimConfig) -> float:
    return planner.fixed_costs_mb(p, config)


def cmd_predict(args) -> Report:
    p = load_profile(resolve_input(args.profile))
    name = target_module(p, args.module)
    module = p.module(name)
    config = SimConfig()

    if args.calibrate is not None:
        if not args.calibrate > 0:
            raise ValueError("--calibrate must be > 0 seconds")
        intercept_s, source = args.calibrate, "argument"
    else:
        intercept_s, source = predictor.resolve_intercept(p, config)
    slope = args.slope_ms if args.slope_ms is not None else predictor.slope_from_profile(module)
    k_values = parse_k_range(args.k) if args.k else list(range(module.layers))

    fixed = _fixed_mb(p, config)
    rows = []
    for pred in predictor.predict(intercept_s, slope, k_values):
        rows.append([pred.k, _r3(pred.predicted_s), _mb(fixed + pred.k * module.layer_mem_mb)])

    summary = Section("summary", ["field", "value"], [
        ["module", name],
        ["intercept_s", _r3(intercept_s)],
        ["intercept_source", source],
        ["slope_ms_per_layer", _r3(slope)],
    ], kv=True)
    return Report([summary, Section("predictions", ["k", "predicted_s", "vram_total_mb"], rows)])


def cmd_validate(args) -> Report:
    p = load_profile(resolve_input(args.profile))
    name = target_module(p, args.module)
    module = p.module(name)
    config = SimConfig()
    measured = predictor.read_measured_sweep(resolve_input(args.measured, suffix=".csv"))

    measured_by_k = dict(measured)
    if args.calibrate is not None:
        if not args.calibrate > 0:
            raise ValueError("--calibrate must be > 0 seconds")
        intercept_s, source = args.calibrate, "argument"
    elif 0 in measured_by_k:
        intercept_s, source = measured_by_k[0], "measured k=0 row"
    else:
        intercept_s, source = predictor.resolve_intercept(p, config)
    slope = args.slope_ms if args.slope_ms is not None else predictor.slope_from_profile(module)

    predictions = predictor.predict(intercept_s, slope, [k for k, _ in measured])
    report = predictor.validate(predictions, measured)

    rows = [
        [r.k, _r3(r.predicted_s), _r3(r.measured_s), _r2(r.error_pct)]
        for r in report.rows
    ]
    summary = Section("summary", ["field", "value"], [
        ["module", name],
        ["intercept_s", _r3(intercept_s)],
        ["intercept_source", source],
        ["slope_ms_per_layer", _r3(slope)],
        ["max_abs_error_pct", _r2(report.max_abs_error_pct)],
        ["fitted_slope_s", _r3(report.fitted_slope_s) if report.fitted_slope_s is not None else None],
    ], kv=True)
    return Report([
        summary,
        Section("validation", ["k", "predicted_s", "measured_s", "error_pct"], rows),
    ])


# --- wiring --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layerswap",
        description="Analyze, simulate, and plan layer-wise CPU-to-GPU "
                    "parameter-swapping inference pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("profile", help="profile file path or bundled fixture name "
                                        f"(override fixture dir with ${FIXTURE_ENV})")
        sp.add_argument("--format", choices=sorted(RENDERERS), default="table")
        sp.add_argument("--out", help="write the report to this path instead of stdout")

    sp = sub.add_parser("analyze", help="phase regimes, residency benefits, limits, crossovers")
    common(sp)
    sp.set_defaults(handler=cmd_analyze)

    sp = sub.add_parser("simulate", help="simulate one inference under a placement")
    sp.add_argument("profile")
    sp.add_argument("plan", nargs="?", help="plan file whose placement to simulate")
    sp.add_argument("--resident", action="append", metavar="MODULE=K",
                    help="interleave K resident layers in MODULE (repeatable)")
    sp.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.PIPELINED.value)
    sp.add_argument("--slots", type=int, default=2)
    sp.add_argument("--prefetch", action="store_true",
                    help="let transfers cross invocation/phase boundaries")
    sp.add_argument("--trace", help="write the event timeline as CSV to this path")
    sp.add_argument("--format", choices=sorted(RENDERERS), default="table")
    sp.add_argument("--out", help="write the report to this path instead of stdout")
    sp.set_defaults(handler=cmd_simulate)

    sp = sub.add_parser("plan", help="VRAM-budget-optimal residency plan")
    sp.add_argument("profile")
    sp.add_argument("--vram-mb", type=float, required=True)
    sp.add_argument("--format", choices=sorted(RENDERERS), default="table")
    sp.add_argument("--out", help="write the plan file (JSON) to this path")
    sp.set_defaults(handler=cmd_plan)

    sp = sub.add_parser("sweep", help="latency curve over interleaved resident counts")
    common(sp)
    sp.add_argument("--module", help="module to sweep (default: highest middle benefit)")
    sp.add_argument("--k", help="resident count range, e.g. 0..28 (default 0..L-1)")
    sp.set_defaults(handler=cmd_sweep)

    sp = sub.add_parser("predict", help="predicted latency per resident count")
    common(sp)
    sp.add_argument("--module")
    sp.add_argument("--k", help="resident count range, e.g. 0..28")
    sp.add_argument("--calibrate", type=float,
                    help="measured full-offload time in seconds (intercept)")
    sp.add_argument("--slope-ms", type=float, dest="slope_ms",
                    help="override the profile-derived slope, in ms per layer")
    sp.set_defaults(handler=cmd_predict)

    sp = sub.add_parser("validate", help="compare predictions against a measured sweep")
    common(sp)
    sp.add_argument("measured", help="measured sweep CSV with header k,measured_s")
    sp.add_argument("--module")
    sp.add_argument("--calibrate", type=float)
    sp.add_argument("--slope-ms", type=float, dest="slope_ms")
    sp.set_defaults(handler=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.handler(args)
    except (ProfileError, InfeasibleBudgetError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    out = args.out if args.command != "plan" else None
    emit(report, args.format, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
