"""Hardware and model profile data model.

A profile describes one model deployment as measured on one machine: the
GPU's memory budget, an ordered list of weight-stack modules (each a run of
identical layers), and the per-layer transfer (DMA) and execution (EXE)
costs of every phase that runs over those layers. A phase is one invocation
pattern of a module's weights -- e.g. a language model contributes a single
prefill pass and N autoregressive decode passes over the same 36 layers,
while a diffusion head contributes one denoise pass per Euler step.

All downstream analysis (closed-form timing, pipeline simulation, residency
planning, latency prediction) consumes this data model and nothing else.
Profiles are inputs: this package performs no instrumentation of real
models.

Conventions:
  * per-layer costs in milliseconds, uniform across a module's layers
  * memory in decimal megabytes (1 MB = 10^6 bytes; 1 GB = 1000 MB)
  * phases of a module run in listed order; modules run in listed order;
    one "inference" is one pass over all modules' phases

A phase's DMA-to-EXE ratio decides its pipelining regime: ratio < 1 means
transfers can hide entirely behind execution (EXE-intensive); ratio >= 1
means transfers bottleneck the pipeline (DMA-intensive; ties count as
DMA-intensive so plans stay conservative).

All types are immutable after construction and every function here is pure,
so everything is safe to share across threads.
"""

import dataclasses
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any


class ProfileError(ValueError):
    """Malformed or invariant-violating profile data."""


class PhaseKind(str, Enum):
    EXE_INTENSIVE = "exe-intensive"
    DMA_INTENSIVE = "dma-intensive"


class ModuleKind(str, Enum):
    EXE_INTENSIVE = "exe-intensive"
    DMA_INTENSIVE = "dma-intensive"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class HardwareProfile:
    """GPU identity and memory budget.

    ``h2d_gbps`` (pinned host-to-device throughput) is informational only;
    timing always comes from measured per-layer costs, never recomputed
    from bandwidth.
    """

    name: str
    vram_mb: float
    h2d_gbps: float
    overhead_mb: float  # non-parameter VRAM: KV cache, activations, framework buffers

    def __post_init__(self) -> None:
        if not self.vram_mb > 0:
            raise ProfileError("vram_mb must be > 0")
        if self.overhead_mb < 0:
            raise ProfileError("overhead_mb must be >= 0")


@dataclass(frozen=True)
class PhaseProfile:
    """One invocation pattern over a module's layers.

    ``repetitions`` is the number of times the phase sweeps the layer stack
    per inference: 1 for an encoder or prefill pass, the output token count
    for decode, the number of Euler steps for a diffusion denoiser.
    """

    name: str
    repetitions: int
    dma_ms: float
    exe_ms: float

    def __post_init__(self) -> None:
        if not isinstance(self.repetitions, int) or isinstance(self.repetitions, bool):
            raise ProfileError("repetitions must be an integer")
        if self.repetitions < 1:
            raise ProfileError("repetitions must be >= 1")
        if not self.dma_ms > 0:
            raise ProfileError("dma_ms must be > 0")
        if not self.exe_ms > 0:
            raise ProfileError("exe_ms must be > 0")


@dataclass(frozen=True)
class ModuleProfile:
    """A stack of identical layers plus the phases sharing those weights."""

    name: str
    layers: int
    layer_mem_mb: float
    phases: tuple[PhaseProfile, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.layers, int) or isinstance(self.layers, bool):
            raise ProfileError("layers must be an integer")
        if self.layers < 1:
            raise ProfileError("layers must be >= 1")
        if not self.layer_mem_mb > 0:
            raise ProfileError("layer_mem_mb must be > 0")
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise ProfileError("phases must be nonempty")
        names = [ph.name for ph in self.phases]
        if len(set(names)) != len(names):
            raise ProfileError("phase names must be unique within a module")


@dataclass(frozen=True)
class ModelProfile:
    """Hardware plus the ordered module stack of one model deployment.

    ``always_resident_mb`` covers non-layer components (embeddings,
    projection heads, ...) that stay on the GPU in every configuration and
    are never subject to residency planning. ``calibration_total_s`` is an
    optional measured full-offload end-to-end time used to calibrate the
    latency predictor.
    """

    hardware: HardwareProfile
    modules: tuple[ModuleProfile, ...]
    always_resident_mb: float = 0.0
    calibration_total_s: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "modules", tuple(self.modules))
        if not self.modules:
            raise ProfileError("modules must be nonempty")
        names = [m.name for m in self.modules]
        if len(set(names)) != len(names):
            raise ProfileError("module names must be unique")
        if self.always_resident_mb < 0:
            raise ProfileError("always_resident_mb must be >= 0")
        if self.calibration_total_s is not None and not self.calibration_total_s > 0:
            raise ProfileError("calibration_total_s must be > 0")

    def module(self, name: str) -> ModuleProfile:
        for m in self.modules:
            if m.name == name:
                return m
        raise ProfileError(f"no module named '{name}'")

    def module_index(self, name: str) -> int:
        for i, m in enumerate(self.modules):
            if m.name == name:
                return i
        raise ProfileError(f"no module named '{name}'")

    @property
    def max_layer_mem_mb(self) -> float:
        return max(m.layer_mem_mb for m in self.modules)


@dataclass(frozen=True)
class PhaseClass:
    """Classification of a phase: its regime plus the DMA/EXE ratio."""

    kind: PhaseKind
    ratio: float


def classify(phase: PhaseProfile) -> PhaseClass:
    """Classify a phase by its DMA-to-EXE ratio.

    ratio < 1 is EXE-intensive (transfers fully hideable); ratio >= 1 is
    DMA-intensive. The tie goes to DMA-intensive: at equality pipelining
    leaves no hideable slack, and the conservative call never yields an
    optimistic plan.
    """
    ratio = phase.dma_ms / phase.exe_ms
    kind = PhaseKind.EXE_INTENSIVE if ratio < 1.0 else PhaseKind.DMA_INTENSIVE
    return PhaseClass(kind=kind, ratio=ratio)


def module_kind(module: ModuleProfile) -> ModuleKind:
    """EXE- or DMA-intensive if all phases agree, hybrid otherwise."""
    kinds = {classify(ph).kind for ph in module.phases}
    if kinds == {PhaseKind.EXE_INTENSIVE}:
        return ModuleKind.EXE_INTENSIVE
    if kinds == {PhaseKind.DMA_INTENSIVE}:
        return ModuleKind.DMA_INTENSIVE
    return ModuleKind.HYBRID


# --- file format ------------------------------------------------------------
#
# A profile file is a single JSON document:
#
#   {
#     "hardware": {"name": ..., "vram_mb": ..., "h2d_gbps": ..., "overhead_mb": ...},
#     "always_resident_mb": ...,
#     "calibration_total_s": ...,          # optional
#     "modules": [
#       {"name": ..., "layers": ..., "layer_mem_mb": ...,
#        "phases": [{"name": ..., "repetitions": ..., "dma_ms": ..., "exe_ms": ...}]}
#     ]
#   }
#
# Unknown keys are rejected by name so typos never pass silently.

_HARDWARE_KEYS = {"name", "vram_mb", "h2d_gbps", "overhead_mb"}
_TOP_KEYS = {"hardware", "always_resident_mb", "calibration_total_s", "modules"}
_MODULE_KEYS = {"name", "layers", "layer_mem_mb", "phases"}
_PHASE_KEYS = {"name", "repetitions", "dma_ms", "exe_ms"}


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ProfileError(f"unknown key '{key}' in {where}")


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ProfileError(f"missing key '{key}' in {where}")
    return obj[key]


def _number(value: Any, key: str, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProfileError(f"{where}: {key} must be a number")
    return float(value)


def _integer(value: Any, key: str, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProfileError(f"{where}: {key} must be an integer")
    return value


def _string(value: Any, key: str, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise ProfileError(f"{where}: {key} must be a nonempty string")
    return value


def _parse_phase(obj: Any, where: str) -> PhaseProfile:
    if not isinstance(obj, dict):
        raise ProfileError(f"{where}: each phase must be an object")
    _reject_unknown(obj, _PHASE_KEYS, where)
    name = _string(_require(obj, "name", where), "name", where)
    here = f"{where}, phase {name}"
    try:
        return PhaseProfile(
            name=name,
            repetitions=_integer(_require(obj, "repetitions", here), "repetitions", here),
            dma_ms=_number(_require(obj, "dma_ms", here), "dma_ms", here),
            exe_ms=_number(_require(obj, "exe_ms", here), "exe_ms", here),
        )
    except ProfileError as err:
        raise ProfileError(f"{here}: {err}") from None


def _parse_module(obj: Any) -> ModuleProfile:
    if not isinstance(obj, dict):
        raise ProfileError("each module must be an object")
    _reject_unknown(obj, _MODULE_KEYS, "module")
    name = _string(_require(obj, "name", "module"), "name", "module")
    where = f"module {name}"
    phases_raw = _require(obj, "phases", where)
    if not isinstance(phases_raw, list):
        raise ProfileError(f"{where}: phases must be a list")
    phases = tuple(_parse_phase(ph, where) for ph in phases_raw)
    try:
        return ModuleProfile(
            name=name,
            layers=_integer(_require(obj, "layers", where), "layers", where),
            layer_mem_mb=_number(_require(obj, "layer_mem_mb", where), "layer_mem_mb", where),
            phases=phases,
        )
    except ProfileError as err:
        raise ProfileError(f"{where}: {err}") from None


def from_dict(doc: Any) -> ModelProfile:
    """Build a validated ModelProfile from an already-parsed JSON document."""
    if not isinstance(doc, dict):
        raise ProfileError("profile document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "profile")

    hw_raw = _require(doc, "hardware", "profile")
    if not isinstance(hw_raw, dict):
        raise ProfileError("hardware must be an object")
    _reject_unknown(hw_raw, _HARDWARE_KEYS, "hardware")
    try:
        hardware = HardwareProfile(
            name=_string(_require(hw_raw, "name", "hardware"), "name", "hardware"),
            vram_mb=_number(_require(hw_raw, "vram_mb", "hardware"), "vram_mb", "hardware"),
            h2d_gbps=_number(_require(hw_raw, "h2d_gbps", "hardware"), "h2d_gbps", "hardware"),
            overhead_mb=_number(_require(hw_raw, "overhead_mb", "hardware"), "overhead_mb", "hardware"),
        )
    except ProfileError as err:
        raise ProfileError(f"hardware: {err}") from None

    modules_raw = _require(doc, "modules", "profile")
    if not isinstance(modules_raw, list):
        raise ProfileError("modules must be a list")
    modules = tuple(_parse_module(m) for m in modules_raw)

    calibration = doc.get("calibration_total_s")
    if calibration is not None:
        calibration = _number(calibration, "calibration_total_s", "profile")
    try:
        return ModelProfile(
            hardware=hardware,
            modules=modules,
            always_resident_mb=_number(
                _require(doc, "always_resident_mb", "profile"), "always_resident_mb", "profile"
            ),
            calibration_total_s=calibration,
        )
    except ProfileError as err:
        raise ProfileError(f"profile: {err}") from None


def loads(text: str) -> ModelProfile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ProfileError(f"malformed profile file: {err}") from None
    return from_dict(doc)


def load_profile(path: str | Path) -> ModelProfile:
    """Load and fully validate a profile file."""
    path = Path(path)
    if not path.is_file():
        raise ProfileError(f"profile file not found: {path}")
    return loads(path.read_text(encoding="utf-8"))


def to_dict(p: ModelProfile) -> dict:
    doc: dict[str, Any] = {
        "hardware": dataclasses.asdict(p.hardware),
        "always_resident_mb": p.always_resident_mb,
    }
    if p.calibration_total_s is not None:
        doc["calibration_total_s"] = p.calibration_total_s
    doc["modules"] = [
        {
            "name": m.name,
            "layers": m.layers,
            "layer_mem_mb": m.layer_mem_mb,
            "phases": [dataclasses.asdict(ph) for ph in m.phases],
        }
        for m in p.modules
    ]
    return doc


def dumps(p: ModelProfile) -> str:
    return json.dumps(to_dict(p), indent=2) + "\n"


def save_profile(p: ModelProfile, path: str | Path) -> None:
    Path(path).write_text(dumps(p), encoding="utf-8")
