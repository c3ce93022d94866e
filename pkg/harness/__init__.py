from .config import HyperConfig, SearchRanges, VARIANTS, variant_regularizers
from .database import ResultStore, TrialRecord
from .presets import preset, preset_by_name, preset_names
from .search import SearchReport, random_search, sample_config
from .surface import SurfaceGrid, demo_surface, max_weight_gradient
from .sweep import SweepRow, SweepTable, apply_axis, sweep
from .training import EpochRecord, TrainingTrace, train

__all__ = [
    "HyperConfig", "SearchRanges", "VARIANTS", "variant_regularizers",
    "ResultStore", "TrialRecord", "preset", "preset_by_name", "preset_names",
    "SearchReport", "random_search", "sample_config", "SurfaceGrid",
    "demo_surface", "max_weight_gradient", "SweepRow", "SweepTable",
    "apply_axis", "sweep", "EpochRecord", "TrainingTrace", "train",
]
