"""Sparse neural network training with a clipped-L1 penalty.

The package trains fully connected networks by minimizing empirical risk
plus a clipped-L1 penalty through convex surrogates and proximal-gradient
steps, which yields exact zeros in the weights during training.  It also
ships the simulated benchmarks the method is evaluated on, simple
comparators, and calculators for the quantitative bounds behind the method.

Hot numeric kernels are numba-compiled with a pure-numpy fallback; set
``CLIPNET_BACKEND=numpy`` to force the fallback.
"""
import os as _os

# The workload is many small matrix products; BLAS-level threading only adds
# spin overhead (an order of magnitude at these sizes).  Parallelism belongs
# at the replicate level (CLIPNET_THREADS).  No-ops if numpy is already
# loaded or the variables are set.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

from . import activations
from ._kernels import BACKEND
from .activations import ActivationKind
from .baselines import KnnModel, knn_fit, knn_predict, knn_predict_batch
from .datagen import (
    Dataset,
    calibrate_constant,
    empirical_l2_error,
    gen_classification_toy,
    gen_regression,
    load_dataset,
    noise_variance_ratio,
    save_dataset,
    signal_scale,
    true_function,
    true_function_batch,
)
from .harness import (
    ExperimentConfig,
    ResultRecord,
    default_lambda_grid,
    ingest_csv,
    lambda_anchor,
    run_experiment,
    split_validation,
    tune_and_fit,
)
from .losses import (
    EXPONENTIAL,
    LOGISTIC,
    SQUARE,
    LossKind,
    empirical_risk,
    loss_deriv,
    loss_value,
)
from .network import (
    LayerShapeError,
    MlpSpec,
    NetworkParams,
    NonFiniteError,
    flatten,
    forward,
    forward_batch,
    grad,
    init_params,
    param_count,
    risk_and_grad,
    unflatten,
)
from .optimizer import (
    DivergenceError,
    FitReport,
    OptimizerConfig,
    adam_fit,
    fit,
    inner_loop,
    prox_step,
    sparsity,
)
from .penalty import (
    PenaltyConfig,
    active_signs,
    clipped_norm,
    concave_part,
    penalized_objective,
    surrogate_objective,
)
from .theory import (
    ClassParams,
    CoveringBound,
    IdentityConstruction,
    LipschitzReport,
    covering_bound,
    covering_bound_clipped,
    hard_threshold,
    identity_net,
    lipschitz_bound,
    verify_lipschitz,
)

__version__ = "0.1.0"
