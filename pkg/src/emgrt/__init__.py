"""Real-time EMG gesture classification.

Pipeline: overlapped windowing -> 2-level db1 wavelet decomposition -> a
19-function statistical feature bank per coefficient layer -> stacks of
recurrent basic units (one- or bidirectional, same or sequential inputs)
-> majority voting over per-window decisions.

The package is served over HTTP (``emgrt.service``) with the command-line
tool acting as a thin client; the core stays importable as a library.
"""

__version__ = "0.1.0"

from . import dataio, dwt, features, pipeline, postprocess, reports, rnn, signal
from .dataio import DatasetManifest, load_manifest, load_recordings, write_dataset
from .dwt import db1_filters, decompose, dwt_level, reconstruct
from .errors import (
    ConfigError,
    DataFormatError,
    DwtError,
    EmgrtError,
    FeatureError,
    ModelFormatError,
    TrainingError,
    UnsupportedLengthError,
    WindowingError,
)
from .features import (
    FEATURE_NAMES,
    FeatureParams,
    FeatureVector,
    Normalizer,
    apply_normalizer,
    compute_feature,
    fit_normalizer,
    wavelet_feature_vector,
)
from .model_io import load_model, save_model
from .pipeline import PipelineConfig, build_examples, train_from_manifest, train_from_recordings
from .postprocess import (
    Decision,
    LatencyReport,
    SweepReport,
    bench_latency,
    classify_signal,
    majority_vote,
    per_class_accuracy,
    sweep,
)
from .rnn import (
    ARCH_BRNN,
    ARCH_RNN,
    MODE_SAME,
    MODE_SEQUENTIAL,
    BuParams,
    StackModel,
    TrainConfig,
    backward,
    brnn_forward,
    bu1_forward,
    bu2_forward,
    finite_diff_grad,
    loss,
    rnn_forward,
    stack_inputs,
    stack_predict,
    train,
)
from .signal import Recording, Window, segment_windows, synth_dataset
