"""thermoface: desk-scale thermal face verification.

A numpy-only library pairing a synthetic thermogram generator with a
from-scratch Siamese encoder (explicit gradient tape), contrastive
training, open-set gallery matching, and a ROC/EER evaluation harness.
"""

from .autodiff import GradTape, Tensor, grad_check
from .camera import CameraProfile, Finding, load_camera_profile, validate_camera
from .data import (DatasetManifest, ManifestEntry, SplitSpec, Thermogram,
                   load_thermogram, preprocess, read_manifest, save_thermogram,
                   split_dataset, write_manifest)
from .encoder import (EncoderConfig, ModelParams, build_encoder, embed,
                      euclidean_distance, load_params, parameter_count,
                      params_fingerprint, save_params, sgd_step)
from .errors import (CompatibilityError, ConfigError, ContractError, DataError,
                     DimensionError, FormatError, NotEnrolledError, NumericError,
                     ThermofaceError)
from .evaluation import (ConfusionCounts, EvalReport, RocPoint, compute_metrics,
                         confusion, decide, equal_error_rate, evaluate,
                         format_report, pair_distances, roc_curve,
                         select_threshold, write_report_csv)
from .gallery import (Gallery, enroll, identify, identify_scores, load_gallery,
                      save_gallery, verify)
from .synthetic import SynthConfig, generate_synthetic, identity_template
from .training import (AugParams, PairSample, TrainConfig, TrainHistory, augment,
                       contrastive_loss, make_pairs, train, write_history_csv)

__version__ = "0.1.0"
