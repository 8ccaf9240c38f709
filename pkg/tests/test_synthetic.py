import itertools
from pathlib import Path

import numpy as np
from conftest import SMALL_SPEC

from rank_intent import (
    INTENT_SIZE,
    PlantedBlackBox,
    Query,
    SyntheticSpec,
    cosine,
    generate_collection,
    load_workspace,
)
from rank_intent._io import read_intents, read_queries
from rank_intent._synthetic import QUERY_TERMS_PER_TOPIC, grade_steps, graded_topic, topic_terms


def test_generation_is_seeded(small_collection):
    again = generate_collection(SMALL_SPEC)
    assert again.documents == small_collection.documents
    assert again.queries == small_collection.queries
    np.testing.assert_array_equal(again.embeddings.matrix, small_collection.embeddings.matrix)
    other = generate_collection(SMALL_SPEC, seed=8)
    assert other.documents != small_collection.documents


def test_shape(small_collection):
    spec = small_collection.spec
    topic_docs = spec.n_topics * spec.docs_per_topic
    assert len(small_collection.documents) == topic_docs + spec.background_docs
    assert [qid for qid, _ in small_collection.queries] == ["q00", "q01", "q02", "q03"]
    assert all(len(terms) == INTENT_SIZE for terms in small_collection.intents.values())


def test_every_intent_term_occurs_in_its_topic(small_collection):
    index = small_collection.index()
    spec = small_collection.spec
    for topic in range(spec.n_topics):
        first = topic * spec.docs_per_topic
        members = {f"d{n:04d}" for n in range(first, first + spec.docs_per_topic)}
        for term in topic_terms(topic)[1]:
            assert any(doc_id in members for doc_id, _ in index.postings[term])


def test_intent_terms_sit_near_the_query(small_collection):
    table = small_collection.embeddings
    query, intent, noise = topic_terms(0)
    near = np.mean([cosine(table[query[0]], table[t]) for t in intent])
    far = np.mean([cosine(table[query[0]], table[t]) for t in noise])
    assert near > far


def test_write_and_config(small_collection, tmp_path):
    config = small_collection.config(tmp_path, sampling="topk")
    assert config.blackbox == "planted"
    assert Path(config.output_dir) == tmp_path / "runs"
    assert read_intents(config.intents_path) == small_collection.intents
    assert read_queries(config.queries_path) == list(small_collection.queries)
    workspace = load_workspace(config)
    assert workspace.index.doc_count == len(small_collection.documents)
    assert len(workspace.queries) == 4
    assert workspace.blackbox.name == "planted"


def test_spec_overrides():
    collection = generate_collection(n_topics=2, docs_per_topic=5, vocab_size=50, seed=1)
    assert collection.spec == SyntheticSpec(n_topics=2, docs_per_topic=5, vocab_size=50, seed=1)
    assert len(collection.documents) == 10 + collection.spec.background_docs


def test_overrides_apply_to_a_given_spec():
    collection = generate_collection(SyntheticSpec(n_topics=2, docs_per_topic=5), vocab_size=50)
    assert collection.spec.vocab_size == 50
    assert collection.spec.n_topics == 2


def test_grade_steps():
    query, intent, _ = topic_terms(0)
    steps = grade_steps(query, intent, 24)
    assert len(steps) == 23
    assert steps[:4] == ["t00i9", "t00i9", "t00i0", "t00i0"]
    assert steps[-3:] == ["t00q0"] * 3
    assert grade_steps(query, intent, 5) == ["t00i9", "t00i9", "t00i0", "t00i0"]
    assert grade_steps(query, intent, 1) == []


def test_graded_topic_keeps_lengths_and_orders_terms():
    query, intent, noise = topic_terms(3)
    bags = graded_topic(query, intent, noise, 12)
    assert len({len(bag) for bag in bags}) == 1
    for better, worse in itertools.pairwise(bags):
        for term in (*query, *intent):
            assert better.count(term) >= worse.count(term)
        for term in noise:
            assert better.count(term) <= worse.count(term)
    # intent terms the grade never reaches still occur once everywhere
    assert all(bag.count("t03i8") == 1 for bag in bags)


def test_vocabulary_covers_the_background(small_collection):
    spec = small_collection.spec
    index = small_collection.index()
    per_topic = QUERY_TERMS_PER_TOPIC + 2 * INTENT_SIZE
    assert index.vocab_size == spec.vocab_size + spec.n_topics * per_topic


def test_topic_documents_share_a_length(small_collection):
    index = small_collection.index()
    spec = small_collection.spec
    for topic in range(spec.n_topics):
        first = topic * spec.docs_per_topic
        ids = [f"d{n:04d}" for n in range(first, first + spec.docs_per_topic)]
        assert len({doc.length for doc in index.documents(ids)}) == 1


def test_planted_box_ranks_the_grade_without_ties(small_collection):
    index = small_collection.index()
    box = PlantedBlackBox(index, small_collection.intents)
    for qid, text in small_collection.queries:
        ranking = box.rank(Query.parse(qid, text))
        assert len(ranking) == small_collection.spec.docs_per_topic
        assert (np.diff(ranking.scores) < 0).all()
        top = index.document(ranking.doc_ids[0])
        assert top.tf[small_collection.intents[qid][-1]] == 2
