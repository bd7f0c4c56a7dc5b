"""Deterministic two-engine simulator of the parameter-swapping pipeline.

The model of execution mirrors how a GPU actually runs a layer-streamed
inference: a copy engine performs host-to-device transfers (DMA) while an
execute engine runs layer forwards (EXE), and a pair of pre-allocated
buffer slots (the double flat buffer) is reused by all streamed layers in
alternation. Two events govern every slot: a layer may not execute before
its transfer finishes, and a slot may not be overwritten before its current
occupant has finished executing.

Scheduling rules, in full:

  * Both engines are serial. Transfers are issued FIFO in layer order.
  * EXE of layer i waits for EXE of layer i-1 of the same invocation and,
    if the layer is streamed, for its own DMA.
  * DMA of a streamed layer waits for the copy engine and for the EXE
    completion of its slot's previous occupant.
  * Resident layers emit no DMA and occupy no slot; their EXE still runs
    on the execute engine (residency removes transfer, not compute).
  * Slots are assigned by parity over the *streamed-layer sequence* of a
    phase invocation, not by raw layer index: with residency, raw-index
    parity can drop two consecutive streamed layers into one slot and
    serialize them for no reason.
  * Sequential mode (the non-pipelined baseline) issues each layer's DMA
    strictly after the previous layer's EXE, with no lookahead.
  * By default no transfer crosses an invocation, phase, or module
    boundary: the next sweep's first DMA waits for the current sweep's
    last EXE. `cross_invocation_prefetch=True` lifts that barrier, letting
    the copy engine run ahead subject only to slot reuse.

Times are plain binary floating-point sums of the input costs accumulated
in a fixed order (module -> phase -> invocation -> layer), so identical
inputs reproduce bit-identical timelines. When a boundary barrier is in
force, every engine and slot constraint from before the barrier is
dominated by it, so the loop schedules each invocation against a zero
origin and adds the accumulated base offset; that keeps rounding error at
the scale of one invocation instead of the whole run.

`simulate` accepts optional per-layer cost overrides for heterogeneity
experiments; the closed forms in `analytic` assume uniform costs, which is
what profiles carry.

Each call runs its own single-threaded event loop over local state only,
so distinct simulations may run concurrently.
"""

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .profile import ModelProfile

# (module name, phase name) -> per-layer (dma_ms, exe_ms), overriding the
# uniform phase costs for heterogeneity experiments.
LayerCosts = Mapping[tuple[str, str], "list[tuple[float, float]]"]


class Engine(str, Enum):
    COPY = "copy"
    EXECUTE = "execute"


class Mode(str, Enum):
    SEQUENTIAL = "sequential"
    PIPELINED = "pipelined"


@dataclass(frozen=True)
class Placement:
    """Per-module set of GPU-resident layer indices (0-based).

    A module absent from the mapping is fully streamed. An empty placement
    is full offload; all indices of every module is preloading.
    """

    resident: dict[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        normalized = {name: frozenset(idx) for name, idx in self.resident.items()}
        object.__setattr__(self, "resident", normalized)

    @classmethod
    def of(cls, mapping: Mapping[str, Iterable[int]]) -> "Placement":
        return cls({name: frozenset(idx) for name, idx in mapping.items()})

    @classmethod
    def empty(cls) -> "Placement":
        return cls({})

    @classmethod
    def full(cls, p: ModelProfile) -> "Placement":
        return cls({m.name: frozenset(range(m.layers)) for m in p.modules})

    def for_module(self, name: str) -> frozenset[int]:
        return self.resident.get(name, frozenset())

    def resident_mb(self, p: ModelProfile) -> float:
        return sum(len(self.for_module(m.name)) * m.layer_mem_mb for m in p.modules)

    def counts(self, p: ModelProfile) -> dict[str, int]:
        return {m.name: len(self.for_module(m.name)) for m in p.modules}


@dataclass(frozen=True)
class SimConfig:
    mode: Mode = Mode.PIPELINED
    cross_invocation_prefetch: bool = False
    slot_count: int = 2

    def __post_init__(self) -> None:
        if self.slot_count < 1:
            raise ValueError("slot_count must be >= 1")


@dataclass(frozen=True)
class SimEvent:
    engine: Engine
    module: str
    phase: str
    invocation: int
    layer: int
    start_ms: float
    end_ms: float


@dataclass(frozen=True)
class Timeline:
    events: tuple[SimEvent, ...]
    total_ms: float


@dataclass(frozen=True)
class VramReport:
    """Exact VRAM accounting: streaming buffers, planned resident layers,
    always-resident components, and non-parameter overhead."""

    buffer_mb: float
    resident_mb: float
    always_resident_mb: float
    overhead_mb: float
    total_mb: float
    fits: bool


def validate_placement(p: ModelProfile, placement: Placement) -> None:
    module_names = {m.name for m in p.modules}
    for name, indices in placement.resident.items():
        if name not in module_names:
            raise ValueError(f"placement references unknown module '{name}'")
        layers = p.module(name).layers
        for i in indices:
            if not 0 <= i < layers:
                raise ValueError(
                    f"placement for module '{name}' has out-of-range layer index "
                    f"{i} (valid 0..{layers - 1})"
                )


def _phase_costs(
    module_name: str, phase_name: str, layers: int,
    dma_ms: float, exe_ms: float, layer_costs: LayerCosts | None,
) -> list[tuple[float, float]]:
    if layer_costs is None or (module_name, phase_name) not in layer_costs:
        return [(dma_ms, exe_ms)] * layers
    costs = list(layer_costs[(module_name, phase_name)])
    if len(costs) != layers:
        raise ValueError(
            f"per-layer cost override for {module_name}/{phase_name} has "
            f"{len(costs)} entries, expected {layers}"
        )
    for dma, exe in costs:
        if not dma > 0 or not exe > 0:
            raise ValueError("per-layer cost overrides must be positive")
    return costs


def simulate(
    p: ModelProfile,
    placement: Placement,
    config: SimConfig = SimConfig(),
    layer_costs: LayerCosts | None = None,
) -> Timeline:
    """Run one inference (all modules, all phases, all repetitions) and
    return the full event timeline."""
    validate_placement(p, placement)
    sequential = config.mode is Mode.SEQUENTIAL
    # Sequential mode has no lookahead at all, so invocation boundaries are
    # barriers there too, independent of the prefetch flag.
    barrier_bound = sequential or not config.cross_invocation_prefetch

    base = 0.0  # sum of completed-invocation makespans when barrier_bound
    copy_free = 0.0
    exe_free = 0.0
    slot_release = [0.0] * config.slot_count
    events: list[SimEvent] = []

    for module in p.modules:
        resident = placement.for_module(module.name)
        for phase in module.phases:
            costs = _phase_costs(
                module.name, phase.name, module.layers,
                phase.dma_ms, phase.exe_ms, layer_costs,
            )
            for invocation in range(phase.repetitions):
                streamed_seq = 0
                for layer in range(module.layers):
                    dma_ms, exe_ms = costs[layer]
                    if layer in resident:
                        exe_start = exe_free
                        exe_free = exe_start + exe_ms
                        events.append(SimEvent(
                            Engine.EXECUTE, module.name, phase.name,
                            invocation, layer, base + exe_start, base + exe_free,
                        ))
                        continue
                    slot = streamed_seq % config.slot_count
                    if sequential:
                        dma_start = max(copy_free, exe_free)
                    else:
                        dma_start = max(copy_free, slot_release[slot])
                    dma_end = dma_start + dma_ms
                    copy_free = dma_end
                    events.append(SimEvent(
                        Engine.COPY, module.name, phase.name,
                        invocation, layer, base + dma_start, base + dma_end,
                    ))
                    exe_start = max(exe_free, dma_end)
                    exe_free = exe_start + exe_ms
                    events.append(SimEvent(
                        Engine.EXECUTE, module.name, phase.name,
                        invocation, layer, base + exe_start, base + exe_free,
                    ))
                    slot_release[slot] = exe_free
                    streamed_seq += 1
                if barrier_bound:
                    # Nothing started before the boundary may constrain what
                    # comes after it, so fold the makespan into the base and
                    # restart the engines and slots at the new origin.
                    base += exe_free
                    copy_free = 0.0
                    exe_free = 0.0
                    slot_release = [0.0] * config.slot_count

    total = base if barrier_bound else max((e.end_ms for e in events), default=0.0)
    return Timeline(events=tuple(events), total_ms=total)


def simulated_total(
    p: ModelProfile,
    placement: Placement,
    config: SimConfig = SimConfig(),
    layer_costs: LayerCosts | None = None,
) -> float:
    return simulate(p, placement, config, layer_costs).total_ms


def vram_report(
    p: ModelProfile, placement: Placement, config: SimConfig = SimConfig()
) -> VramReport:
    """VRAM footprint of a placement: slot_count buffers each sized to the
    largest layer across all modules, plus resident layers, always-resident
    components, and non-parameter overhead."""
    validate_placement(p, placement)
    buffer_mb = config.slot_count * p.max_layer_mem_mb
    resident_mb = placement.resident_mb(p)
    total = buffer_mb + resident_mb + p.always_resident_mb + p.hardware.overhead_mb
    return VramReport(
        buffer_mb=buffer_mb,
        resident_mb=resident_mb,
        always_resident_mb=p.always_resident_mb,
        overhead_mb=p.hardware.overhead_mb,
        total_mb=total,
        fits=total <= p.hardware.vram_mb,
    )


TRACE_HEADER = ["engine", "module", "phase", "invocation", "layer", "start_ms", "end_ms"]


def write_trace(timeline: Timeline, path: str | Path) -> None:
    """Emit one CSV row per event, full float precision."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for e in timeline.events:
            writer.writerow([
                e.engine.value, e.module, e.phase, e.invocation, e.layer,
                repr(e.start_ms), repr(e.end_ms),
            ])
