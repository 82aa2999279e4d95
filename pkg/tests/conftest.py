from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
ADULT_DIR = ROOT / "data" / "adult"
ADULT_TRAIN = ADULT_DIR / "adult.data"
ADULT_TEST = ADULT_DIR / "adult.test"

needs_adult = pytest.mark.skipif(not ADULT_TRAIN.is_file() or not ADULT_TEST.is_file(),
                                 reason="UCI Adult files not present under data/adult")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def adult_records():
    from advdebias.data import load_adult
    if not ADULT_TRAIN.is_file():
        pytest.skip("UCI Adult files not present under data/adult")
    return load_adult(ADULT_TRAIN, ADULT_TEST)


@pytest.fixture(scope="session")
def adult_encoded(adult_records):
    from advdebias.data import AdultCodec, encode_features
    train, test = adult_records
    codec = AdultCodec().fit(train)
    return codec, encode_features(train, codec), encode_features(test, codec)
