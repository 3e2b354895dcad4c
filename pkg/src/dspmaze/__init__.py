"""Triple T-maze learning testbed.

Binary recurrent agents navigate a 29x29 triple T-maze. Training runs
either through evolved delayed-plasticity rules driven by per-synapse
activation traces, or through a Gaussian hill climber over the raw weight
vector; a small GA discovers the rules and parameters.
"""

from .evolution import GaConfig, Genotype, evaluate_dsp, evaluate_hc, evolve
from .hillclimb import HcParams, hc_trial, perturb
from .maze import (
    Action,
    GoalConfig,
    Maze,
    MazeError,
    Orientation,
    Pose,
    SensorReading,
    default_maze,
    episodic_performance,
    load_maze,
    parse_maze,
    run_episode,
    shortest_path_distance,
)
from .plasticity import (
    DspRule,
    NatStore,
    TrialResult,
    apply_update,
    binarize,
    dsp_delta,
    dsp_trial,
    modulatory_signal,
    normalize_incoming,
    rule_index,
)
from .rnn import (
    RnnController,
    RnnDims,
    RnnHyper,
    RnnState,
    RnnWeights,
    decode_action,
    flatten,
    forward,
    init_weights,
    unflatten,
)
from .rulebundle import default_rule_bundle, load_rule_bundle, rule_by_id, save_rule_bundle
from .stats import summarize, wilcoxon_rank_sum

__version__ = "0.1.0"
