"""Online learning algorithms with regret, forward-regret and stability diagnostics."""
from .algorithms import (
    COMiD,
    DeltaSchedule,
    EXACT,
    FTL,
    FTRL,
    IOL,
    MD,
    RDA,
    BatchWrapper,
    Mode,
    Schedule,
    approx,
    make_learner,
    run,
    validate_regime,
)
from .errors import ConfigError, DiagnosticError, DomainError, RegretLabError, SolverError
from .geometry import (
    Box,
    EuclideanBall,
    HalfSquaredL2,
    NegativeEntropy,
    Simplex,
    bregman,
    dual_norm_grad_bound,
    project,
)
from .losses import (
    AdversarySequence,
    CompositePart,
    HingeLoss,
    LinearLoss,
    LossList,
    QuadraticLoss,
    hindsight_optimum,
)
from .metrics import (
    BoundVerdict,
    Trajectory,
    check_all,
    check_bound,
    check_equivalence,
    diagnose,
    forward_regret,
    regret,
    stability,
    uniform_stability,
)
from .solver import InnerObjective, SolveCertificate, solve

__version__ = "0.1.0"

__all__ = [
    "COMiD", "DeltaSchedule", "EXACT", "FTL", "FTRL", "IOL", "MD", "RDA", "BatchWrapper",
    "Mode", "Schedule", "approx", "make_learner", "run", "validate_regime", "Box",
    "EuclideanBall", "HalfSquaredL2", "NegativeEntropy", "Simplex", "bregman",
    "dual_norm_grad_bound", "project", "AdversarySequence", "CompositePart", "HingeLoss",
    "LinearLoss", "LossList", "QuadraticLoss", "hindsight_optimum", "BoundVerdict",
    "Trajectory", "check_all", "check_bound", "check_equivalence", "diagnose", "forward_regret",
    "regret", "stability", "uniform_stability", "ConfigError", "DiagnosticError", "DomainError",
    "RegretLabError", "SolverError", "InnerObjective", "SolveCertificate", "solve"
]
