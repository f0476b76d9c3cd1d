"""PDE-based dehazing with LIP-driven flow, fast haze-model approximations and quality metrics."""

from .enhance import ClaheCfg, FheCfg, GocCsCfg, IrcesCfg, clahe, fhe, goc_cs, irces
from .estimators import ColorCorrector, FastDehazer, PdeDehazer
from .fastdehaze import (FilterCfg, HazeModel, fast_dehaze_a, fast_dehaze_b, restore_exact,
                         synth_haze)
from .lip import LipParams, lip_mult
from .metrics import MetricsReport, evaluate
from .pde import PdeParams, dehaze_pde, dust_pipeline, evolve, underwater_pipeline

__all__ = [
    "ClaheCfg", "FheCfg", "GocCsCfg", "IrcesCfg", "clahe", "fhe", "goc_cs", "irces",
    "ColorCorrector", "FastDehazer", "PdeDehazer",
    "FilterCfg", "HazeModel", "fast_dehaze_a", "fast_dehaze_b", "restore_exact", "synth_haze",
    "LipParams", "lip_mult", "MetricsReport", "evaluate",
    "PdeParams", "dehaze_pde", "dust_pipeline", "evolve", "underwater_pipeline",
]
__version__ = "0.1.0"
