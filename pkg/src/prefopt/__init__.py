"""prefopt: active preference-based global optimization with RBF surrogates.

A latent (never directly measured) objective is minimized from pairwise
"A or B?" judgments. An RBF surrogate is fitted to the comparisons via a
convex QP, optionally regularized toward a hypothesis built from measurable
descriptors (sensor or simulation channels), and new queries are proposed by
an IDW-explorative acquisition rule. Includes a half-car suspension tuning
testbed, Monte Carlo benchmarking, and an HTTP session service for live
human-in-the-loop runs.
"""

from .core import (Bounds, Dataset, Preference, PreferenceSet, TAU_DUP,
                   encode_preference, scale_from_unit, scale_to_unit)
from .surrogate import (DescriptorBank, FitConfig, Hypothesis, KernelSpec,
                        Surrogate, eval_hypothesis, eval_surrogate,
                        fit_baseline, fit_regularized)
from .acquisition import AcquisitionConfig, acquisition_value, idw_z, minimize_acquisition
from .hypercv import CvGrid, CvResult, count_violations, cross_validate
from .loop import LoopConfig, LoopState, PendingQuery, run_autonomous
from .halfcar import BumpScenario, HalfCarParams, SignalTrace, simulate
from .oracles import make_problem

__version__ = "0.1.0"

__all__ = [
    "Bounds", "Dataset", "Preference", "PreferenceSet", "TAU_DUP",
    "encode_preference", "scale_from_unit", "scale_to_unit",
    "DescriptorBank", "FitConfig", "Hypothesis", "KernelSpec", "Surrogate",
    "eval_hypothesis", "eval_surrogate", "fit_baseline", "fit_regularized",
    "AcquisitionConfig", "acquisition_value", "idw_z", "minimize_acquisition",
    "CvGrid", "CvResult", "count_violations", "cross_validate",
    "LoopConfig", "LoopState", "PendingQuery", "run_autonomous",
    "BumpScenario", "HalfCarParams", "SignalTrace", "simulate",
    "make_problem",
    "__version__",
]
