import numpy as np
import pytest

from emgrt.dataio import load_manifest, write_dataset
from emgrt.model_io import save_model
from emgrt.pipeline import PipelineConfig, train_from_recordings
from emgrt.rnn import ARCH_BRNN, ARCH_RNN, MODE_SAME, MODE_SEQUENTIAL, TrainConfig
from emgrt.signal import synth_dataset

# Small everywhere: 2 classes, 2 channels, 0.7 s recordings (13 windows each),
# trials 1-4 train / 5-6 test. Enough signal for 600 ms decisions.
SYNTH_KWARGS = dict(num_classes=2, channels=2, trials_per_class=6, duration=0.7, seed=123)
TRAIN_CFG = TrainConfig(epochs=60, hidden1=12, hidden2=12, batch_size=16, seed=0)


@pytest.fixture(scope="session")
def tiny_recordings():
    return synth_dataset(**SYNTH_KWARGS)


@pytest.fixture(scope="session")
def tiny_split(tiny_recordings):
    train = [r for r in tiny_recordings if int(r.trial_id) <= 4]
    test = [r for r in tiny_recordings if int(r.trial_id) > 4]
    return train, test


@pytest.fixture(scope="session")
def tiny_model(tiny_split):
    train_recs, _ = tiny_split
    return train_from_recordings(
        train_recs, PipelineConfig(), TRAIN_CFG, ARCH_BRNN, MODE_SAME, num_classes=2
    )


@pytest.fixture(scope="session")
def tiny_model_seq(tiny_split):
    train_recs, _ = tiny_split
    return train_from_recordings(
        train_recs, PipelineConfig(), TRAIN_CFG, ARCH_RNN, MODE_SEQUENTIAL, num_classes=2
    )


@pytest.fixture(scope="session")
def tiny_dataset_dir(tmp_path_factory, tiny_recordings):
    out = tmp_path_factory.mktemp("dataset")
    manifest_path = write_dataset(out, tiny_recordings, num_classes=2, train_trials=4)
    return manifest_path


@pytest.fixture(scope="session")
def tiny_manifest(tiny_dataset_dir):
    return load_manifest(tiny_dataset_dir)


@pytest.fixture(scope="session")
def served_model_path(tmp_path_factory, tiny_model):
    path = tmp_path_factory.mktemp("models") / "brnn_same.json"
    save_model(path, tiny_model)
    return str(path)


@pytest.fixture(scope="session")
def served_seq_model_path(tmp_path_factory, tiny_model_seq):
    path = tmp_path_factory.mktemp("models") / "rnn_seq.json"
    save_model(path, tiny_model_seq)
    return str(path)
