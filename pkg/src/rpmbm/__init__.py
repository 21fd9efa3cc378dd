"""Multi-object tracking with joint detection-probability estimation.

A Poisson multi-Bernoulli mixture filter whose per-object detection
probability is estimated online through exact Beta-Gaussian conjugate
recursions, plus the simulation and evaluation machinery around it.
"""

from .distributions import (
    BetaGaussianComponent,
    BetaParams,
    GaussianComponent,
    InvalidMomentsError,
)
from .metrics import ospa
from .pmbm import (
    BernoulliTrack,
    BetaDetection,
    EstimateSet,
    FilterConfig,
    FixedDetection,
    GlobalHypothesis,
    PmbmPosterior,
    PoissonIntensity,
    estimate,
    predict,
    reduce_posterior,
    step,
    update,
)
from .sim import ScenarioConfig, default_scenario, generate_measurements, generate_truth

__version__ = "0.1.0"
