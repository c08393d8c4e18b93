"""Multiway clustering of 3-order tensors through slice affinity matrices."""

__version__ = "0.1.0"

from .affinity import (AffinityMatrix, affinity_mcam1, affinity_mcam2, affinity_top,
                       build_affinity, component_matrix)
from .baselines import CPModel, TuckerModel, cp_als, factor_clustering, hooi
from .clustering import (APParams, ModeClustering, affinity_propagation, kmeans,
                         spectral_clustering)
from .errors import (BoundsError, ConfigError, ContractError, DegenerateInputError, FormatError,
                     MCAMError, NumericError)
from .metrics import (BlockModel, MultiwayClustering, ari, block_rmse, nmi,
                      silhouette_select_k)
from .pipeline import RunConfig, SweepSpec, cluster, run_mcam, run_sweep
from .spectra import (ModeSpectra, SliceSpectrum, effective_dimension, mode_spectra,
                      select_components, slice_covariance, top_eigenpairs)
from .synthgen import GroundTruth, SyntheticSpec, generate
from .tensor import as_tensor, load_tensor, mode_slice, read_tensor, save_tensor
