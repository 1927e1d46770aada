"""Constrained generative sampling via mirror maps.

Data on a constrained domain (simplex, box) is transported to an
unconstrained dual space by the gradient of a convex potential, diffused
and denoised there, and pulled back through the conjugate gradient.
Classical constrained samplers (mirror/projected Langevin, square-root
diffusions) are included as baselines and verification oracles.
"""

__version__ = "0.1.0"

from .baselines import (CirParams, LangevinConfig, cir_step, dirichlet_from_cir,
                        mla_step, pla_step, project_to_simplex, reflect_into_box,
                        run_cir, run_mla, run_pla, run_ula, ula_step)
from .categorical import (AlternatingPair, Argmax, CategoricalCodec,
                          ConstantToken, MarkovChain, SequenceBatch, TopK,
                          Vocabulary, decode, encode_onehot, flatten_dual,
                          make_toy_dataset, mirror_encode, shift_scale,
                          unflatten_dual)
from .diffusion import (forward_marginal, forward_step, reverse_step_dual_ddpm,
                        reverse_step_mirror_corrected, sample_dual_ddpm,
                        sample_mirror_corrected)
from .domains import Domain
from .errors import (CheckpointError, ConfigError, DomainError, EncodingError,
                     InsufficientDataError, MirrorDiffusionError,
                     NonFiniteLossError, ScoreModelError, ShapeError,
                     UnsupportedError)
from .metrics import (MetricReport, SampleBatch, empirical_moments,
                      histogram_kl, ks_statistic, violation_count,
                      wasserstein1_1d)
from .mirror import (IdentityMap, LogBarrierMap, MirrorMap, NegativeEntropyMap,
                     default_map_for, make_mirror_map, softmax)
from .mlp import (AdamState, Mlp, MlpArch, TrainingConfig, adam_update,
                  init_mlp, load_checkpoint, save_checkpoint, time_features)
from .rng import CounterStream, make_generator, philox_normals
from .schedule import NoiseSchedule
from .scores import (DualMarginalScore, MirrorStationaryScore, MlpScore,
                     analytic_dual_score, denoised_estimate, make_exact_score,
                     mirror_stationary_score, noise_to_score,
                     pushforward_log_density, train_dsm)
from .targets import (Dirichlet, Empirical, GaussianMixture, ProductBeta,
                      TargetDistribution, standard_normal_target)
