"""Feedback-controlled data collection.

Select samples from a data stream with a closed loop: an online Gaussian
estimate of what has been collected so far sets the acceptance probability
of each incoming sample, steering the stored dataset toward coverage
(complementary value function) or bounded uniformity (reciprocal value
function).  Includes open-loop and fixed-rate baselines, synthetic stream
generators, coverage/balance metrics, and a CLI for reproducible runs.
"""

from .control import Decision, DecisionRng, RngConfig, decide
from .errors import (ConfigError, FcdcError, IncompatiblePayload,
                     InsufficientSamples, SingularCovariance,
                     StreamFormatError)
from .estimator import (DEFAULT_REGULARIZATION, RegularizationConfig,
                        RunningGaussian)
from .kernel import BACKEND_NAME
from .metrics import (MetricsPoint, cv, delta_uni, histogram, qq_points,
                      write_histogram_csv, write_metrics_csv, write_qq_csv)
from .pipeline import (EmbeddingSpec, Pipeline, PipelineConfig, RunReport,
                       StreamRecord, embed, embed_records,
                       normalization_bounds, run)
from .streams import (CountStreamConfig, DEFAULT_COUNT_K_MAX,
                      DEFAULT_COUNT_WEIGHTS, GaussianStreamConfig,
                      count_stream, count_values, gaussian_matrix,
                      gaussian_stream, read_csv, read_jsonl, write_jsonl)
from .value import (DEFAULT_NU, DEFAULT_R_MAX_SQ, DEFAULT_WARMUP_FLOOR,
                    PolicyConfig, VARIANTS, evaluate, psi_complementary,
                    psi_reciprocal)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "ConfigError",
    "CountStreamConfig",
    "DEFAULT_COUNT_K_MAX",
    "DEFAULT_COUNT_WEIGHTS",
    "DEFAULT_NU",
    "DEFAULT_REGULARIZATION",
    "DEFAULT_R_MAX_SQ",
    "DEFAULT_WARMUP_FLOOR",
    "Decision",
    "DecisionRng",
    "EmbeddingSpec",
    "FcdcError",
    "GaussianStreamConfig",
    "IncompatiblePayload",
    "InsufficientSamples",
    "MetricsPoint",
    "Pipeline",
    "PipelineConfig",
    "PolicyConfig",
    "RegularizationConfig",
    "RngConfig",
    "RunReport",
    "RunningGaussian",
    "SingularCovariance",
    "StreamFormatError",
    "StreamRecord",
    "VARIANTS",
    "count_stream",
    "count_values",
    "cv",
    "decide",
    "delta_uni",
    "embed",
    "embed_records",
    "evaluate",
    "gaussian_matrix",
    "gaussian_stream",
    "histogram",
    "normalization_bounds",
    "psi_complementary",
    "psi_reciprocal",
    "qq_points",
    "read_csv",
    "read_jsonl",
    "run",
    "write_histogram_csv",
    "write_jsonl",
    "write_metrics_csv",
    "write_qq_csv",
    "__version__",
]
