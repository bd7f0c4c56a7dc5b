"""Residency planning: which layers to pin on the GPU under a VRAM budget.

Within one module every candidate layer of a position class has the same
per-layer saving and the same memory cost, so greedy selection by benefit
density (ms saved per MB pinned) is exact -- no knapsack machinery needed.
Candidate classes per module: the first layer (capacity 1), the middle
layers (capacity L-2), and the last layer (capacity 1), ranked across all
modules by ms/MB.

Chosen layers are materialized by interleaved placement: k resident layers
go at evenly spaced indices floor(i*(L-1)/k), which always includes the
first layer, always leaves the last layer streamed, and keeps the gaps
between resident layers as wide as possible so that runs of adjacent
resident layers stay under the consecutive residency limit. When k is
pushed close to L-1 the limit is unavoidably violated; the planner still
emits the interleaved placement and reports simulated (not idealized)
totals, so the marginal-loss regime is visible rather than hidden.

Non-layer always-resident components are charged to fixed costs, never
subject to selection.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import analytic
from .analytic import Position
from .dfbsim import Placement, SimConfig, VramReport, simulated_total, vram_report
from .profile import ModelProfile


class InfeasibleBudgetError(ValueError):
    """Fixed costs alone exceed the VRAM budget."""


@dataclass(frozen=True)
class Candidate:
    """One position class of one module, ready for greedy ranking."""

    module: str
    position: Position
    benefit_ms_per_mb: float
    delta_ms_per_layer: float
    layer_mem_mb: float
    capacity: int


@dataclass(frozen=True)
class Plan:
    placement: Placement
    resident_count_per_module: dict[str, int]
    predicted_saving_ms: float
    vram: VramReport
    simulated_total_ms: float | None = None


@dataclass(frozen=True)
class SweepPoint:
    k: int
    placement: Placement
    simulated_total_ms: float
    vram_total_mb: float


def interleaved_indices(k: int, layers: int) -> frozenset[int]:
    """Evenly spaced resident indices: {floor(i*(layers-1)/k), i=0..k-1}.

    Includes index 0 for k >= 1 and never includes layers-1, so the last
    layer stays streamed. Spacing by (layers-1)/k makes the selected
    indices strictly increasing, hence exactly k of them.
    """
    if layers < 2:
        raise ValueError("interleaved placement requires layers >= 2")
    if k < 0:
        raise ValueError("resident count must be >= 0")
    if k > layers - 1:
        raise ValueError(
            f"resident count {k} exceeds layers-1 = {layers - 1}: "
            "the last layer must stay streamed"
        )
    return frozenset(i * (layers - 1) // k for i in range(k))


def rank_candidates(p: ModelProfile) -> list[Candidate]:
    """All position classes of all modules, best benefit density first.

    Zero-benefit classes rank last but are kept: with budget to spare they
    are still taken, which reproduces preloading in the unlimited case.
    Ties break by module order, then first < middle < last.
    """
    position_order = {Position.FIRST: 0, Position.MIDDLE: 1, Position.LAST: 2}
    candidates = []
    for m in p.modules:
        capacities = {
            Position.FIRST: 1,
            Position.MIDDLE: max(m.layers - 2, 0),
            Position.LAST: 1 if m.layers >= 2 else 0,
        }
        for position, capacity in capacities.items():
            if capacity == 0:
                continue
            entry = analytic.residency_benefit(m, position)
            candidates.append(Candidate(
                module=m.name,
                position=position,
                benefit_ms_per_mb=entry.benefit_ms_per_mb,
                delta_ms_per_layer=entry.delta_ms,
                layer_mem_mb=m.layer_mem_mb,
                capacity=capacity,
            ))
    candidates.sort(key=lambda c: (
        -c.benefit_ms_per_mb, p.module_index(c.module), position_order[c.position],
    ))
    return candidates


def fixed_costs_mb(p: ModelProfile, config: SimConfig = SimConfig()) -> float:
    """VRAM consumed before any layer is pinned: streaming buffers plus
    always-resident components plus non-parameter overhead."""
    return (
        config.slot_count * p.max_layer_mem_mb
        + p.always_resident_mb
        + p.hardware.overhead_mb
    )


def _materialize(p: ModelProfile, selected: dict[str, dict[Position, int]]) -> Placement:
    resident: dict[str, frozenset[int]] = {}
    for m in p.modules:
        picks = selected.get(m.name, {})
        k = picks.get(Position.FIRST, 0) + picks.get(Position.MIDDLE, 0)
        if m.layers >= 2:
            indices = interleaved_indices(k, m.layers)
        else:
            indices = frozenset(range(k))  # single-layer module: k is 0 or 1
        if picks.get(Position.LAST, 0):
            indices = indices | {m.layers - 1}
        if indices:
            resident[m.name] = indices
    return Placement(resident)


def plan_for_budget(
    p: ModelProfile,
    vram_budget_mb: float,
    config: SimConfig = SimConfig(),
    include_simulated: bool = False,
) -> Plan:
    """Greedy benefit-density plan under a VRAM budget.

    Consumes ranked candidate classes in order, taking as many layers from
    each as the budget allows; within a module the first+middle count is
    materialized as interleaved indices and a taken last class adds the
    final index explicitly.
    """
    fixed = fixed_costs_mb(p, config)
    if vram_budget_mb < fixed:
        raise InfeasibleBudgetError(
            f"budget {vram_budget_mb:g} MB is below fixed costs {fixed:g} MB "
            "(streaming buffers + always-resident components + overhead)"
        )
    remaining = vram_budget_mb - fixed
    saving = 0.0
    selected: dict[str, dict[Position, int]] = {}
    for cand in rank_candidates(p):
        affordable = int(remaining // cand.layer_mem_mb)
        take = min(cand.capacity, affordable)
        if take <= 0:
            continue
        remaining -= take * cand.layer_mem_mb
        saving += take * cand.delta_ms_per_layer
        selected.setdefault(cand.module, {})[cand.position] = take

    placement = _materialize(p, selected)
    report = vram_report(p, placement, config)
    simulated = simulated_total(p, placement, config) if include_simulated else None
    return Plan(
        placement=placement,
        resident_count_per_module=placement.counts(p),
        predicted_saving_ms=saving,
        vram=report,
        simulated_total_ms=simulated,
    )


def sweep(
    p: ModelProfile,
    module_name: str,
    k_values: Iterable[int],
    config: SimConfig = SimConfig(),
) -> list[SweepPoint]:
    """Simulate interleaved placements of one module for each k."""
    module = p.module(module_name)
    points = []
    for k in k_values:
        indices = interleaved_indices(k, module.layers)
        placement = Placement({module_name: indices} if indices else {})
        points.append(SweepPoint(
            k=k,
            placement=placement,
            simulated_total_ms=simulated_total(p, placement, config),
            vram_total_mb=vram_report(p, placement, config).total_mb,
        ))
    return points


# --- plan file --------------------------------------------------------------
#
# A plan file is a JSON document:
#   {"placement": {module: [indices]}, "resident_count_per_module": {...},
#    "predicted_saving_ms": ..., "vram": {...}, "simulated_total_ms": ...}
# Only "placement" is required to feed a plan back into simulation.


def plan_to_dict(plan: Plan) -> dict:
    doc = {
        "placement": {
            name: sorted(idx) for name, idx in sorted(plan.placement.resident.items())
        },
        "resident_count_per_module": plan.resident_count_per_module,
        "predicted_saving_ms": plan.predicted_saving_ms,
        "vram": {
            "buffer_mb": plan.vram.buffer_mb,
            "resident_mb": plan.vram.resident_mb,
            "always_resident_mb": plan.vram.always_resident_mb,
            "overhead_mb": plan.vram.overhead_mb,
            "total_mb": plan.vram.total_mb,
            "fits": plan.vram.fits,
        },
    }
    if plan.simulated_total_ms is not None:
        doc["simulated_total_ms"] = plan.simulated_total_ms
    return doc


def save_plan(plan: Plan, path: str | Path) -> None:
    Path(path).write_text(json.dumps(plan_to_dict(plan), indent=2) + "\n", encoding="utf-8")


def load_placement(path: str | Path) -> Placement:
    """Read the placement back from a plan file."""
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"plan file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValueError(f"malformed plan file: {err}") from None
    if not isinstance(doc, dict) or "placement" not in doc:
        raise ValueError("plan file must be an object with a 'placement' key")
    raw = doc["placement"]
    if not isinstance(raw, dict):
        raise ValueError("plan placement must map module names to index lists")
    resident: dict[str, frozenset[int]] = {}
    for name, indices in raw.items():
        if not isinstance(indices, list) or not all(
            isinstance(i, int) and not isinstance(i, bool) for i in indices
        ):
            raise ValueError(f"plan placement for module '{name}' must be a list of integers")
        resident[name] = frozenset(indices)
    return Placement(resident)
