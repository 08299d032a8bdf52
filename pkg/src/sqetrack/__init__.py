"""Ground-truth-free quality scoring and tuning for multi-object trackers."""
from ._backend import NAME as BACKEND
from .assignment import AssignmentProblem, solve_assignment
from .distance import DistanceSamples, feature_distance, inter_distances, intra_distances
from .errors import (EstimationInfeasibleError, ParseError, SqeTrackError, UndefinedInputError,
                     ValidationError)
from .gmm import GmmFit, SampleStats, fit_gmm2, mean_gap, sample_stats
from .harness import (GridSpec, SweepResult, TuneOutcome, correlation_report, sweep,
                      tune_alternating)
from .refmetrics import ClearCounts, IdCounts, clear_mot, id_metrics
from .sqe import (ErrorEstimate, SqeParams, SqeReport, classify_pair, classify_trajectory,
                  estimate_errors, evaluate)
from .synth import (ChiCheckResult, Scenario, TargetModel, bimodality_demo, chi_check_inter,
                    chi_check_intra, generate, make_scenario)
from .tracker import TrackerConfig, interpolate, merge_tracklets, track
from .trackmodel import (Detection, DetectionStream, GroundTruth, TrackSet, Trajectory,
                         load_trackset, mean_length, save_trackset)

__version__ = "0.1.0"
