"""Closed-form pipeline timing and residency-benefit analysis.

With a copy engine streaming layer parameters while the execute engine runs
the previous layer, a phase's full-offload time collapses to one of two
closed forms depending on which engine is the bottleneck:

  EXE-intensive (dma < exe):  R * (dma + L * exe)   -- only the leading
      transfer is exposed; every later transfer hides behind execution.
  DMA-intensive (dma >= exe): R * (L * dma + exe)   -- transfers are the
      bottleneck and only the last layer's execution sticks out.

Keeping a layer permanently on the GPU removes its transfer from every one
of the phase's R sweeps. How much that is worth depends on the phase regime
and on the layer's position:

  EXE-intensive: only the first layer helps (R * dma); a middle or last
      layer's transfer was already hidden, so residency buys nothing.
  DMA-intensive: first and middle layers save the full R * dma; the last
      layer saves only R * (dma - exe), because once its transfer is gone
      the previous layer's execution becomes the new exposed tail.

A module whose phases fall in different regimes (e.g. prefill + decode over
shared weights) simply sums the per-phase position benefits, and dividing
by the layer's memory footprint gives a benefit density in ms/MB that is
comparable across modules.

These forms assume uniform per-layer costs (what profiles provide). The
event simulator is the ground truth they are checked against.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

from .profile import (
    ModelProfile,
    ModuleProfile,
    PhaseKind,
    PhaseProfile,
    classify,
)

# Give up on a benefit crossover search beyond this many decode repetitions.
CROSSOVER_CAP = 512


class Position(str, Enum):
    FIRST = "first"
    MIDDLE = "middle"
    LAST = "last"


@dataclass(frozen=True)
class BenefitEntry:
    """Per-inference saving from keeping one layer resident at a position."""

    module: str
    position: Position
    delta_ms: float
    benefit_ms_per_mb: float


@dataclass(frozen=True)
class LowerBound:
    """Execution-only time floor: what infinite VRAM (preloading) would give."""

    total_ms: float
    per_module_ms: dict[str, float]


def phase_time_full_offload(phase: PhaseProfile, layers: int) -> float:
    """Pipelined time of one phase with every layer streamed from the CPU."""
    if layers < 1:
        raise ValueError("layers must be >= 1")
    if classify(phase).kind is PhaseKind.EXE_INTENSIVE:
        return phase.repetitions * (phase.dma_ms + layers * phase.exe_ms)
    return phase.repetitions * (layers * phase.dma_ms + phase.exe_ms)


def module_time_full_offload(module: ModuleProfile) -> float:
    """Full-offload time of a module: the sum over its phases."""
    return sum(phase_time_full_offload(ph, module.layers) for ph in module.phases)


def lower_bound(p: ModelProfile) -> LowerBound:
    """Sum of per-layer execution times over all phases; no transfer terms."""
    per_module: dict[str, float] = {}
    for m in p.modules:
        per_module[m.name] = sum(ph.repetitions * m.layers * ph.exe_ms for ph in m.phases)
    return LowerBound(total_ms=sum(per_module.values()), per_module_ms=per_module)


def _phase_position_delta(phase: PhaseProfile, position: Position) -> float:
    if classify(phase).kind is PhaseKind.EXE_INTENSIVE:
        if position is Position.FIRST:
            return phase.repetitions * phase.dma_ms
        return 0.0
    if position is Position.LAST:
        return phase.repetitions * (phase.dma_ms - phase.exe_ms)
    return phase.repetitions * phase.dma_ms


def residency_benefit(module: ModuleProfile, position: Position) -> BenefitEntry:
    """Saving per inference if one layer at `position` stays GPU-resident.

    Compositional over phases, so hybrid modules need no special casing:
    an EXE-intensive prefill contributes only at the first position, the
    DMA-intensive decode contributes at every position, and their sum is
    the module-level benefit.
    """
    delta = sum(_phase_position_delta(ph, position) for ph in module.phases)
    return BenefitEntry(
        module=module.name,
        position=position,
        delta_ms=delta,
        benefit_ms_per_mb=delta / module.layer_mem_mb,
    )


def consecutive_limit(phase: PhaseProfile) -> int:
    """Longest run of adjacent resident layers whose executions still hide
    inside one streamed layer's transfer: floor(dma / exe).

    Only meaningful for DMA-intensive phases; an EXE-intensive phase hides
    every transfer already, so the limit is undefined there.
    """
    if classify(phase).kind is PhaseKind.EXE_INTENSIVE:
        raise ValueError(
            f"consecutive residency limit undefined for phase '{phase.name}': "
            "transfers already hide behind execution (ratio < 1)"
        )
    return math.floor(phase.dma_ms / phase.exe_ms)


def _decode_phase_index(module: ModuleProfile) -> int:
    """Index of the phase whose repetition count plays the role of the
    output token count: the last DMA-intensive phase."""
    for i in range(len(module.phases) - 1, -1, -1):
        if classify(module.phases[i]).kind is PhaseKind.DMA_INTENSIVE:
            return i
    raise ValueError(
        f"module '{module.name}' has no transfer-bound phase whose repetitions "
        "could parameterize a token count"
    )


def middle_benefit_at_tokens(module: ModuleProfile, tokens: int) -> float:
    """Middle-position benefit density with the decode-like phase's
    repetition count replaced by `tokens`."""
    idx = _decode_phase_index(module)
    phases = list(module.phases)
    phases[idx] = replace(phases[idx], repetitions=tokens)
    varied = replace(module, phases=tuple(phases))
    return residency_benefit(varied, Position.MIDDLE).benefit_ms_per_mb


def max_position_benefit(module: ModuleProfile) -> float:
    return max(residency_benefit(module, pos).benefit_ms_per_mb for pos in Position)


def crossover_tokens(
    target: ModuleProfile, other: ModuleProfile, cap: int = CROSSOVER_CAP
) -> int | None:
    """Smallest token count at which `target`'s middle-layer benefit strictly
    beats the best position benefit of `other`; None if no count up to `cap`
    does."""
    threshold = max_position_benefit(other)
    for n in range(1, cap + 1):
        if middle_benefit_at_tokens(target, n) > threshold:
            return n
    return None
