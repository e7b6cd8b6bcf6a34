"""Small-target detection in single infrared frames via a double-weighted
multi-granularity patch tensor model: the image's sliding-window patch tensor
is split into a low-rank background and a sparse target component by an ADMM
scheme over all balanced tensor unfoldings, guided by an auto-weighted mode
balance and a steering-kernel structure prior."""

__version__ = "0.1.0"

from .config import RunConfig, format_config, load_config, parse_config
from .metrics import RocCurve, TargetBox, bsf, pd_fa, roc, scr, scrg
from .patches import PatchModel, image_to_tensor, plan_patches, prime_factorize, tensor_to_image
from .pgm import read_image, read_pgm, write_pgm
from .pipeline import Detection, DetectionReport, detect, segment
from .prior import PriorMaps, compute_prior_maps, steering_covariance, weight_tensor
from .solver import (
    DivergenceError,
    SolveResult,
    SolverConfig,
    admm_solve,
    auto_weights,
    soft_shrink,
    sparsity_lambda,
    svt,
)
from .synth import SceneSpec, TargetSpec, generate
from .tensor_ops import (
    frobenius_norm,
    hadamard,
    l1_norm,
    nuclear_norm,
    svd,
    tt_fold,
    tt_unfold,
)
