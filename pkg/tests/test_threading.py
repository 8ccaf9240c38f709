import threading
from concurrent.futures import ThreadPoolExecutor

from rank_intent import PlantedBlackBox, Query


def test_concurrent_scoring(small_collection):
    """Many threads scoring the same documents see the sequential values."""
    index = small_collection.index()
    box = PlantedBlackBox(index, small_collection.intents)
    queries = [Query.parse(qid, text) for qid, text in small_collection.queries]
    expected = {
        (q.query_id, d): PlantedBlackBox(index, small_collection.intents).score(q, d)
        for q in queries
        for d in index.doc_ids
    }

    def worker(i):
        for q in queries[i % 2 :] + queries[: i % 2]:
            for d in index.doc_ids:
                assert box.score(q, d) == expected[(q.query_id, d)]

    with ThreadPoolExecutor(max_workers=8) as pool:
        futures = [pool.submit(worker, i) for i in range(8)]
        for f in futures:
            f.result()

    info = box.cache_info()
    assert info.hits > 0
    assert info.current_size == len(expected)


def test_concurrent_cache_clear(small_collection):
    """cache_clear during concurrent scoring doesn't corrupt results."""
    index = small_collection.index()
    box = PlantedBlackBox(index, small_collection.intents)
    query = Query.parse(*small_collection.queries[0])
    reference = box.score(query, index.doc_ids[0])
    stop = threading.Event()
    errors = []

    def reader():
        while not stop.is_set():
            if box.score(query, index.doc_ids[0]) != reference:
                errors.append("mismatch")

    def clearer():
        for _ in range(50):
            box.cache_clear()

    threads = [threading.Thread(target=reader) for _ in range(4)]
    threads.append(threading.Thread(target=clearer))
    for t in threads:
        t.start()
    threads[-1].join(timeout=5)
    stop.set()
    for t in threads:
        t.join(timeout=5)
    assert not errors


def test_concurrent_rankings_agree(small_collection):
    index = small_collection.index()
    box = PlantedBlackBox(index, small_collection.intents)
    query = Query.parse(*small_collection.queries[1])
    reference = box.rank(query).doc_ids
    box.cache_clear()

    with ThreadPoolExecutor(max_workers=6) as pool:
        rankings = list(pool.map(lambda _: box.rank(query).doc_ids, range(12)))
    assert all(r == reference for r in rankings)
