import math
import warnings

import pytest

from murmurscope.config import Config
from murmurscope.evaluate import evaluate_corpus, write_corpus
from murmurscope.synth import generate_corpus

warnings.filterwarnings("ignore", message=".*degenerate apex offset.*")

PER_CLASS = 50
CORPUS_SEED = 7


@pytest.fixture(scope="session")
def config():
    return Config()


@pytest.fixture(scope="session")
def clean_corpus_dir(tmp_path_factory, config):
    out = tmp_path_factory.mktemp("corpus_clean")
    cases, manifest = generate_corpus(PER_CLASS, snr_db=math.inf, seed=CORPUS_SEED, sig_cfg=config.signal)
    write_corpus(cases, manifest, out)
    return out


@pytest.fixture(scope="session")
def noisy_corpus_dir(tmp_path_factory, config):
    out = tmp_path_factory.mktemp("corpus_20db")
    cases, manifest = generate_corpus(PER_CLASS, snr_db=20.0, seed=CORPUS_SEED, sig_cfg=config.signal)
    write_corpus(cases, manifest, out)
    return out


@pytest.fixture(scope="session")
def clean_eval(clean_corpus_dir, config):
    """(EvalResult, outcomes, elapsed_seconds) for the noiseless corpus."""
    import time

    t0 = time.perf_counter()
    result, outcomes, _ = evaluate_corpus(clean_corpus_dir, config)
    return result, outcomes, time.perf_counter() - t0


@pytest.fixture(scope="session")
def noisy_eval(noisy_corpus_dir, config):
    result, outcomes, _ = evaluate_corpus(noisy_corpus_dir, config)
    return result, outcomes
