"""Residual-certified exact DMD and kernelized EDMD."""
from .errors import (ConfigurationError, DegenerateError, EmbeddingError, ParseError, RankError,
                     ResDMDError, ShapeError)
from .exact_dmd import (ExactDmdResult, TruncatedSvd, exact_dmd, exact_pseudo_point,
                        naive_projected_residual, truncated_svd)
from .kernel_edmd import (KedmdResult, eval_dictionary_at, kedmd, kedmd_pseudo_point,
                          naive_kernel_residual)
from .kernels import KernelSpec, default_scale, gram, kernel_eval
from .oracle import (dictionary, explicit_edmd, explicit_residual, pod_dictionary,
                     poly_feature_map)
from .snapshot_io import (SnapshotPairs, TrajectorySet, delay_embed, load_matrix, mean_subtract,
                          save_matrix, split_realizations)
from .spectral import (ForecastModel, PseudospectrumGrid, eigfun_evaluator, filter_modes,
                       fit_kmd, forecast, grid_sweep, mise, parse_grid)

__version__ = "0.1.0"
