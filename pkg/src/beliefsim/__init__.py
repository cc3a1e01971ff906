"""Monte Carlo robustness of uncertain-reasoning procedures under calibration error."""

from .chain import (ChainModel, DegenerateCounter, all_states, clamp_parameters,
                    conditional_likelihood_given_prefix, evidence_prob_given_h,
                    joint, joint_table, marginal_likelihood, new_chain_model,
                    perturb, posterior_true, sample_true_model, state_index,
                    state_weights)
from .experiment import (Cell, CellResult, ConfigError, ExperimentConfig,
                         default_procedures, derive_run_seed, load_config,
                         run_cell, run_experiment, run_generator)
from .metrics import (ConditionalSummary, accumulate, bin_index, brier, dprime,
                      lr_table)
from .procedures import (Procedure, default_rule, default_vote, linear,
                         naive_bayes, posterior, proper_bayes)

__version__ = "0.1.0"
