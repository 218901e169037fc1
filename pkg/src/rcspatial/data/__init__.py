from .io import format_coord, load_series, series_path, write_series
from .series import (
    HistoricalAverage,
    TimeSeries,
    difference,
    historical_average,
    restore_scale,
    slot_index,
    strip_leap_days,
)
from .split import DatasetSplit, make_split
from .synthetic import SiteGrid, gen_synthetic

__all__ = [
    "DatasetSplit",
    "HistoricalAverage",
    "SiteGrid",
    "TimeSeries",
    "difference",
    "format_coord",
    "gen_synthetic",
    "historical_average",
    "load_series",
    "make_split",
    "restore_scale",
    "series_path",
    "slot_index",
    "strip_leap_days",
    "write_series",
]
