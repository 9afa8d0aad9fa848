import pytest

from lapjitter.config import DegradationConfig
from lapjitter.jitter import MeasurementErrorModel
from lapjitter.pipeline import precorrect_dataset, synthesize_dataset
from lapjitter.scenes import write_corpus


@pytest.fixture(scope="session")
def corpus10(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus10")
    write_corpus(d, 10, seed=1)
    return d


@pytest.fixture(scope="session")
def synth10(corpus10, tmp_path_factory):
    out = tmp_path_factory.mktemp("synth10")
    synthesize_dataset(corpus10, out, DegradationConfig(master_seed=2024))
    return out


@pytest.fixture(scope="session")
def precorrected10(synth10, tmp_path_factory):
    runs = {}
    for bound in (0.0, 0.2):
        out = tmp_path_factory.mktemp(f"pc{bound}")
        runs[bound] = (out, precorrect_dataset(synth10 / "manifest.json", out, MeasurementErrorModel(bound, 5)))
    return runs
