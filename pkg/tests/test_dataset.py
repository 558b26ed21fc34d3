"""Ingestion, feature building, stratified splits, and dataset files."""

import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from venuelift.dataset import (
    Dataset,
    DatasetFormatError,
    EmptyDatasetError,
    FeatureVector,
    IngestConfig,
    Paper,
    SplitError,
    Vocabulary,
    build_features,
    dataset_fingerprint,
    ingest,
    load_dataset,
    mini_fixture_path,
    read_records,
    save_dataset,
    stratified_split,
)

# Table 1 per-venue paper counts for the year-2015 corpus.
REFERENCE_COUNTS = {"AAAI": 634, "IJCAI": 605, "KDD": 172, "NeurIPS": 528, "ICML": 368}
REFERENCE_TRAIN = {"AAAI": 443, "IJCAI": 423, "KDD": 120, "NeurIPS": 369, "ICML": 257}


def make_record(id, venue, fields, citations=5, year=2015, raw_venue=True):
    return {
        "id": id,
        "year": year,
        "venue": {"raw": venue} if raw_venue else venue,
        "fos": [{"name": f, "w": 0.5} for f in fields],
        "n_citation": citations,
    }


def make_papers(counts, fields_fn=None):
    """Synthesize papers: counts maps venue -> size."""
    papers = []
    serial = 0
    for venue, n in counts.items():
        for i in range(n):
            fields = fields_fn(venue, i) if fields_fn else (f"{venue} topic {i % 7}", "shared")
            papers.append(Paper(id=f"p{serial}", fields_of_study=tuple(fields),
                                venue=venue, citations=serial % 13, year=2015))
            serial += 1
    return papers


class TestReadRecords:
    def test_json_array(self):
        text = json.dumps([make_record("1", "KDD", ["a"]), make_record("2", "ICML", ["b"])])
        records = list(read_records(io.StringIO(text)))
        assert [r["id"] for r in records] == ["1", "2"]

    def test_json_lines(self):
        lines = "\n".join(json.dumps(make_record(str(i), "KDD", ["a"])) for i in range(3))
        assert len(list(read_records(io.StringIO(lines)))) == 3

    def test_malformed_line_skipped(self, caplog):
        text = json.dumps(make_record("1", "KDD", ["a"])) + "\n{oops\n" \
            + json.dumps(make_record("2", "KDD", ["b"]))
        with caplog.at_level("WARNING"):
            records = list(read_records(io.StringIO(text)))
        assert [r["id"] for r in records] == ["1", "2"]
        assert any("malformed" in m for m in caplog.messages)

    def test_non_object_entries_skipped(self):
        records = list(read_records(io.StringIO('[{"id": "1"}, 42]')))
        assert records == [{"id": "1"}]

    def test_empty_stream(self):
        assert list(read_records(io.StringIO(""))) == []


class TestIngest:
    def test_alias_normalization(self):
        papers = ingest([make_record("1", "NIPS", ["a"])], IngestConfig())
        assert papers[0].venue == "NeurIPS"

    def test_year_filter(self):
        records = [make_record("1", "KDD", ["a"], year=2015),
                   make_record("2", "KDD", ["a"], year=2016)]
        papers = ingest(records, IngestConfig(year=2015))
        assert [p.id for p in papers] == ["1"]

    def test_unknown_venue_dropped(self):
        records = [make_record("1", "KDD", ["a"]), make_record("2", "ICLR", ["a"])]
        assert len(ingest(records, IngestConfig())) == 1

    def test_malformed_records_skipped_with_warning(self, caplog):
        records = [
            make_record("1", "KDD", ["a"]),
            {"id": "2", "venue": {"raw": "KDD"}},  # missing everything else
            make_record("3", "KDD", ["a"], citations=-1),
            {**make_record("4", "KDD", ["a"]), "n_citation": "many"},
        ]
        with caplog.at_level("WARNING"):
            papers = ingest(records, IngestConfig())
        assert [p.id for p in papers] == ["1"]
        assert sum("malformed" in m for m in caplog.messages) == 3

    def test_empty_result_is_an_error(self):
        with pytest.raises(EmptyDatasetError):
            ingest([make_record("1", "ICLR", ["a"])], IngestConfig())

    def test_fos_weight_threshold(self):
        record = make_record("1", "KDD", [])
        record["fos"] = [{"name": "hot", "w": 0.9}, {"name": "cold", "w": 0.05}]
        papers = ingest([record], IngestConfig(fos_weight_threshold=0.1))
        assert papers[0].fields_of_study == ("hot",)

    def test_plain_string_shapes(self):
        record = make_record("1", "KDD", [], raw_venue=False)
        record["fos"] = ["b", "a"]
        papers = ingest([record], IngestConfig())
        assert papers[0].venue == "KDD"
        assert papers[0].fields_of_study == ("a", "b")

    def test_fixture_corpus(self):
        papers = ingest(read_records(mini_fixture_path()), IngestConfig(year=2015))
        assert len(papers) == 200
        counts = {}
        for p in papers:
            counts[p.venue] = counts.get(p.venue, 0) + 1
            assert p.year == 2015
        assert counts == {v: 40 for v in ("AAAI", "IJCAI", "KDD", "NeurIPS", "ICML")}


class TestBuildFeatures:
    def test_two_paper_example(self):
        papers = [Paper("1", ("a", "b"), "KDD", 0, 2015),
                  Paper("2", ("b", "c"), "ICML", 1, 2015)]
        ds = build_features(papers)
        assert ds.vocabulary.fields == ("a", "b", "c")
        assert ds.feature_vector(0).active_indices == (0, 1)
        assert ds.feature_vector(1).active_indices == (1, 2)

    def test_vocabulary_sorted_lexicographically(self):
        papers = make_papers({"KDD": 5, "ICML": 5})
        ds = build_features(papers)
        assert list(ds.vocabulary.fields) == sorted(ds.vocabulary.fields)

    def test_deterministic(self):
        papers = make_papers({"KDD": 8, "ICML": 8})
        a, b = build_features(papers), build_features(papers)
        assert dataset_fingerprint(a) == dataset_fingerprint(b)

    def test_venue_order_respected(self):
        papers = make_papers({"KDD": 2, "ICML": 2})
        ds = build_features(papers, venue_order=("KDD", "ICML"))
        assert ds.venues == ("KDD", "ICML")
        with pytest.raises(ValueError, match="outside"):
            build_features(papers, venue_order=("KDD",))

    def test_empty_rejected(self):
        with pytest.raises(EmptyDatasetError):
            build_features([])


class TestStratifiedSplit:
    def test_reference_train_sizes(self):
        # floor(0.7 * n) per venue from the year-2015 corpus counts
        ds = build_features(make_papers(REFERENCE_COUNTS))
        train, test = stratified_split(ds, 0.7, seed=3)
        assert train.venue_counts() == REFERENCE_TRAIN
        assert test.venue_counts() == {
            v: REFERENCE_COUNTS[v] - REFERENCE_TRAIN[v] for v in REFERENCE_COUNTS}

    def test_same_seed_identical(self):
        ds = build_features(make_papers({"KDD": 30, "ICML": 25}))
        a_train, a_test = stratified_split(ds, 0.7, seed=11)
        b_train, b_test = stratified_split(ds, 0.7, seed=11)
        assert a_train.ids == b_train.ids and a_test.ids == b_test.ids
        assert dataset_fingerprint(a_train) == dataset_fingerprint(b_train)

    def test_different_seed_differs(self):
        ds = build_features(make_papers({"KDD": 40, "ICML": 40}))
        a, _ = stratified_split(ds, 0.7, seed=0)
        b, _ = stratified_split(ds, 0.7, seed=1)
        assert a.ids != b.ids

    def test_partition_per_venue(self):
        ds = build_features(make_papers({"KDD": 13, "ICML": 7, "AAAI": 9}))
        train, test = stratified_split(ds, 0.6, seed=5)
        assert set(train.ids) | set(test.ids) == set(ds.ids)
        assert set(train.ids) & set(test.ids) == set()

    def test_two_paper_venue_splits_one_one(self):
        ds = build_features(make_papers({"KDD": 2, "ICML": 10}))
        train, test = stratified_split(ds, 0.5, seed=0)
        assert train.venue_counts()["KDD"] == 1
        assert test.venue_counts()["KDD"] == 1

    def test_tiny_venue_error_names_it(self):
        ds = build_features(make_papers({"KDD": 1, "ICML": 10}))
        with pytest.raises(SplitError, match="KDD"):
            stratified_split(ds, 0.7, seed=0)

    def test_vocabulary_from_training_side_only(self):
        # one field appears in a single paper; when that paper lands in
        # test, the field must vanish from the shared vocabulary
        papers = make_papers({"KDD": 10, "ICML": 10})
        papers.append(Paper("rare", ("unicorn", "shared"), "KDD", 3, 2015))
        ds = build_features(papers)
        for seed in range(30):
            train, test = stratified_split(ds, 0.7, seed=seed)
            if "rare" in test.ids:
                assert "unicorn" not in train.vocabulary
                assert "unicorn" not in test.vocabulary
                assert test.X.shape[1] == len(train.vocabulary)
                break
        else:
            pytest.fail("rare paper never landed in the test side")

    def test_projection_safety(self):
        ds = build_features(make_papers({"KDD": 20, "ICML": 20}))
        train, test = stratified_split(ds, 0.7, seed=2)
        assert train.vocabulary == test.vocabulary
        if test.X.nnz:
            assert test.X.indices.max() < len(train.vocabulary)

    def test_bad_fraction_rejected(self):
        ds = build_features(make_papers({"KDD": 4}))
        for fraction in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                stratified_split(ds, fraction, seed=0)

    def test_dense_mode_keeps_coordinates(self):
        rng = np.random.default_rng(0)
        n = 40
        ds = Dataset(
            ids=tuple(f"s{i}" for i in range(n)),
            X=rng.normal(size=(n, 3)),
            venue_index=np.repeat([0, 1], n // 2),
            citations=rng.integers(0, 50, size=n).astype(float),
            venues=("A", "B"),
            vocabulary=Vocabulary(("x0", "x1", "x2")),
            kind="dense",
        )
        train, test = stratified_split(ds, 0.7, seed=0)
        assert train.kind == "dense" and test.kind == "dense"
        assert train.X.shape[1] == 3 and test.X.shape[1] == 3
        assert train.vocabulary == ds.vocabulary

    @settings(max_examples=30, deadline=None)
    @given(
        counts=st.dictionaries(st.sampled_from(["A", "B", "C"]),
                               st.integers(2, 25), min_size=1),
        fraction=st.floats(0.05, 0.95),
        seed=st.integers(0, 2**31),
    )
    def test_split_counts_follow_floor_rule(self, counts, fraction, seed):
        ds = build_features(make_papers(counts))
        train, test = stratified_split(ds, fraction, seed)
        for i, venue in enumerate(ds.venues):
            n = counts[venue]
            expected = max(1, int(np.floor(fraction * n)))
            assert train.rows_for_venue(i).shape[0] == expected
            assert test.rows_for_venue(i).shape[0] == n - expected


class TestVocabularyAndVectors:
    def test_encode_ignores_unknown(self):
        vocab = Vocabulary(("a", "b", "c"))
        vec, ignored = vocab.encode(["c", "zzz", "a", "c"])
        assert vec.active_indices == (0, 2)
        assert ignored == ["zzz"]

    def test_duplicate_fields_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(("a", "a"))

    def test_feature_vector_validation(self):
        with pytest.raises(ValueError):
            FeatureVector(3, (1, 1))
        with pytest.raises(ValueError):
            FeatureVector(3, (2, 1))
        with pytest.raises(ValueError):
            FeatureVector(3, (3,))

    def test_to_dense(self):
        assert FeatureVector(4, (1, 3)).to_dense().tolist() == [0.0, 1.0, 0.0, 1.0]

    def test_negative_citations_rejected(self):
        with pytest.raises(ValueError):
            Paper("1", ("a",), "KDD", -2, 2015)


class TestDatasetFiles:
    def test_round_trip(self, tmp_path):
        ds = build_features(make_papers({"KDD": 9, "ICML": 6}))
        path = tmp_path / "ds.json"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert loaded.ids == ds.ids
        assert loaded.venues == ds.venues
        assert loaded.vocabulary == ds.vocabulary
        assert (loaded.X != ds.X).nnz == 0
        assert np.array_equal(loaded.citations, ds.citations)
        assert dataset_fingerprint(loaded) == dataset_fingerprint(ds)

    def test_dense_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        ds = Dataset(
            ids=("a", "b"),
            X=rng.normal(size=(2, 2)),
            venue_index=np.array([0, 1]),
            citations=np.array([1.0, 2.0]),
            venues=("A", "B"),
            vocabulary=Vocabulary(("x0", "x1")),
            kind="dense",
        )
        path = tmp_path / "dense.json"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert loaded.kind == "dense"
        assert np.array_equal(np.asarray(loaded.X), np.asarray(ds.X))

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format_version": 99, "papers": []}))
        with pytest.raises(DatasetFormatError, match="format_version"):
            load_dataset(path)

    def test_not_a_dataset(self, tmp_path):
        path = tmp_path / "nope.json"
        path.write_text('{"hello": 1}')
        with pytest.raises(DatasetFormatError):
            load_dataset(path)

    def test_fingerprint_sensitive_to_content(self):
        a = build_features(make_papers({"KDD": 5, "ICML": 5}))
        papers = make_papers({"KDD": 5, "ICML": 5})
        papers[0] = Paper("p0", papers[0].fields_of_study, "KDD", 999, 2015)
        b = build_features(papers)
        assert dataset_fingerprint(a) != dataset_fingerprint(b)
