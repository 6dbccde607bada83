"""Joint spectral unmixing of multitemporal hyperspectral image sequences."""

from .admm_abundance import AbundanceAdmmState, a_step, soft_threshold, solve_A
from .admm_endmember import EndmemberAdmmState, s_step, solve_S
from .baseline import PermutationMap, align_permutation, separate_unmix, vca_extract
from .errors import (ConfigurationError, DegeneracyError, DimensionError, DomainError,
                     FormatError, NumericError, UnmixError)
from .kernels import BACKEND
from .metrics import EvalReport, evaluate, scaled_mse, spectral_angle
from .model import (CircleGeometry, Dims, FrameSequence, GroundTruth, NoiseSpec,
                    default_geometry, forward_mix, generate_ntf1, generate_synthetic,
                    make_bump_spectra, make_circle_abundances, make_sinusoid_scales)
from .objective import Hyperparams, evaluate_objective, gradient_smooth_S, tune_hyperparameters
from .solver import SolverConfig, UnmixResult, joint_unmix, outer_converged, update_psi

__version__ = "0.1.0"
