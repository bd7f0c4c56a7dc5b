import pytest

from layerswap.cli import bundled_fixture_dir
from layerswap.profile import (
    HardwareProfile,
    ModelProfile,
    ModuleProfile,
    PhaseProfile,
    load_profile,
)

FIXTURES = bundled_fixture_dir()


@pytest.fixture(scope="session")
def rtx5070ti() -> ModelProfile:
    return load_profile(FIXTURES / "rtx5070ti_alpamayo.json")


@pytest.fixture(scope="session")
def rtx3080ti() -> ModelProfile:
    return load_profile(FIXTURES / "rtx3080ti_alpamayo.json")


def make_phase(reps: int, dma: float, exe: float, name: str = "p") -> PhaseProfile:
    return PhaseProfile(name=name, repetitions=reps, dma_ms=dma, exe_ms=exe)


def make_module(layers: int, mem: float = 1.0, phases=(), name: str = "m") -> ModuleProfile:
    return ModuleProfile(name=name, layers=layers, layer_mem_mb=mem, phases=tuple(phases))


def make_model(*modules, vram: float = 1e9, overhead: float = 0.0,
               always: float = 0.0, calibration: float | None = None) -> ModelProfile:
    hw = HardwareProfile(name="toy", vram_mb=vram, h2d_gbps=30.0, overhead_mb=overhead)
    return ModelProfile(hardware=hw, modules=tuple(modules),
                        always_resident_mb=always, calibration_total_s=calibration)


def single_phase_model(layers: int, reps: int, dma: float, exe: float,
                       mem: float = 1.0) -> ModelProfile:
    return make_model(make_module(layers, mem, [make_phase(reps, dma, exe)]))
