"""Detection of multiple changes in the memory parameter of a long-range
dependent series by minimizing a penalized local Whittle contrast."""

__version__ = "0.1.0"

from . import defaults
from .errors import (
    DataError, DegenerateSegmentError, DomainError, ExclusionLimitError,
    InfeasibleSegmentationError, NumericError, WhittleCPError,
)
from .synthesis import (
    CoefficientSequence, ProcessSpec, Regime, Trajectory, classL_coeffs,
    farima00_coeffs, farima11_coeffs, synthesize, theoretical_acf,
)
from .spectral import (
    FrequencyGrid, SegmentWindow, SpectralPrefix, build_prefix, log_mean_ell,
    periodogram_segment, s_n, w_n,
)
from .whittle import WhittleFit, estimate_d, local_whittle
from .segmentation import (
    CandidateGrid, CostTable, SegmentationResult, SegmentationRow, Selection,
    build_candidate_grid, build_cost_table, detect, dp_segment, segment, select,
    select_bic, select_fixed_penalty, slope_heuristic_select,
)
from .montecarlo import ExperimentConfig, FrequencyTable, RmseTable, rmse, run_known_k, run_unknown_k

__all__ = [name for name in dir() if not name.startswith("_")]
