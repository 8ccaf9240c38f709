import numpy as np
import pytest

from rank_intent import (
    PreferenceMatrix,
    PreferencePair,
    SyntheticSpec,
    build_index,
    generate_collection,
)

TOY_DOCS = [
    ("d1", "Smoking is a health hazard; tobacco smoke harms lungs."),
    ("d2", "Medicine for lung health: doctors handle hazards of smoking."),
    ("d3", "The garden grows tomatoes and beans in summer."),
    ("d4", "Health hazards at work: handle chemicals with gloves."),
    ("d5", "Tobacco farming in summer fields."),
    ("d6", "Lung cancer medicine trials show health benefits."),
]

# "health hazards": medicine alone covers three pairs, adding handle drops it to two
HEALTH_ROWS = {
    "medicine": [0.3, 0.2, 0.1, -0.2],
    "handle": [-0.4, 0.1, 0.05, -0.1],
    "exposure": [0.15, 0.0, 0.0, 0.35],
}
HEALTH_PAIRS = [("d2", "d5"), ("d2", "d10"), ("d5", "d10"), ("d5", "d7")]

SMALL_SPEC = SyntheticSpec(seed=7, n_topics=4, docs_per_topic=12, vocab_size=400)


@pytest.fixture
def toy_index():
    return build_index(TOY_DOCS)


@pytest.fixture
def health_matrix():
    pairs = [PreferencePair(a, b) for a, b in HEALTH_PAIRS]
    return PreferenceMatrix(
        "health-hazards", list(HEALTH_ROWS), pairs, np.array(list(HEALTH_ROWS.values()))
    )


@pytest.fixture(scope="session")
def small_collection():
    return generate_collection(SMALL_SPEC)


@pytest.fixture
def small_config(small_collection, tmp_path):
    return small_collection.config(
        tmp_path, features=40, pool_size=200, caps=(300, 150, 80), sampling="topk-random"
    )
