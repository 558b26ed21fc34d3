"""Bibliographic dataset handling.

Ingests dblp-style paper records, builds the fields-of-study vocabulary and
sparse binary feature vectors, and produces seeded stratified train/test
splits.  Datasets are also saved to and loaded from a self-contained,
versioned JSON file.

Record shape (one JSON object per paper, array or JSON-lines):

    {"id": "...", "year": 2015,
     "venue": {"raw": "NIPS"}            # or a plain string
     "fos": [{"name": "Deep learning", "w": 0.46}, ...],   # or plain strings
     "n_citation": 12}

Field-of-study entries carry relevance weights in the dump; features are
binarized by presence (weight >= the configured threshold, default 0).
"""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from hashlib import sha256
from importlib import resources
from typing import IO, Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp

from .defaults import DEFAULT_VENUE_ALIASES, DEFAULT_VENUES

logger = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1


class EmptyDatasetError(ValueError):
    """No papers survived ingestion filters."""


class SplitError(ValueError):
    """A venue is too small to split."""


class DatasetFormatError(ValueError):
    """A dataset file does not match the expected schema or version."""


@dataclass(frozen=True)
class Paper:
    """One ingested paper: identifier, bag of field names, venue, citations."""

    id: str
    fields_of_study: tuple[str, ...]
    venue: str
    citations: int
    year: int

    def __post_init__(self):
        if self.citations < 0:
            raise ValueError(f"paper {self.id}: negative citation count")


@dataclass(frozen=True)
class FeatureVector:
    """Sparse binary bag: sorted active indices into a vocabulary of size dim."""

    dim: int
    active_indices: tuple[int, ...]

    def __post_init__(self):
        idx = self.active_indices
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("active indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.dim):
            raise ValueError("active index out of range")

    def to_dense(self) -> np.ndarray:
        x = np.zeros(self.dim)
        x[list(self.active_indices)] = 1.0
        return x


class Vocabulary:
    """Immutable bijection between field names and feature indices."""

    def __init__(self, fields: Iterable[str], built_from: str = "full"):
        self._index_to_field = tuple(fields)
        self._field_to_index = {f: i for i, f in enumerate(self._index_to_field)}
        if len(self._field_to_index) != len(self._index_to_field):
            raise ValueError("duplicate field names in vocabulary")
        self.built_from = built_from

    def __len__(self) -> int:
        return len(self._index_to_field)

    def __contains__(self, name: str) -> bool:
        return name in self._field_to_index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and \
            self._index_to_field == other._index_to_field

    def index_of(self, name: str) -> int:
        return self._field_to_index[name]

    def field_at(self, index: int) -> str:
        return self._index_to_field[index]

    @property
    def fields(self) -> tuple[str, ...]:
        return self._index_to_field

    def encode(self, names: Iterable[str]) -> tuple[FeatureVector, list[str]]:
        """Map field names to a feature vector; unknown names are returned
        separately instead of raising (they are simply not representable)."""
        known, ignored = set(), []
        for name in names:
            idx = self._field_to_index.get(name)
            if idx is None:
                ignored.append(name)
            else:
                known.add(idx)
        return FeatureVector(len(self), tuple(sorted(known))), ignored


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus aligned venue and citation arrays.

    ``X`` is a CSR binary matrix for bag-of-fields data or a dense float
    array for real-valued covariates (``kind == "dense"``).  The venue list
    order is fixed and used for all downstream tie-breaking.
    """

    ids: tuple[str, ...]
    X: sp.csr_matrix | np.ndarray
    venue_index: np.ndarray
    citations: np.ndarray
    venues: tuple[str, ...]
    vocabulary: Vocabulary
    kind: str = "sparse"

    def __post_init__(self):
        for name in ("venue_index", "citations"):
            arr = getattr(self, name)
            arr.flags.writeable = False
        n = len(self.ids)
        if not (self.X.shape[0] == self.venue_index.shape[0]
                == self.citations.shape[0] == n):
            raise ValueError("row counts disagree")
        if self.X.shape[1] != len(self.vocabulary):
            raise ValueError("feature dimension does not match vocabulary")
        used = set(np.unique(self.venue_index).tolist())
        if not used <= set(range(len(self.venues))):
            raise ValueError("venue index out of range")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_venues(self) -> int:
        return len(self.venues)

    def venue_of(self, row: int) -> str:
        return self.venues[self.venue_index[row]]

    def rows_for_venue(self, venue_pos: int) -> np.ndarray:
        return np.flatnonzero(self.venue_index == venue_pos)

    def venue_counts(self) -> dict[str, int]:
        return {v: int((self.venue_index == i).sum())
                for i, v in enumerate(self.venues)}

    def feature_vector(self, row: int) -> FeatureVector:
        if self.kind != "sparse":
            raise ValueError("feature vectors are only defined for bag data")
        start, stop = self.X.indptr[row], self.X.indptr[row + 1]
        return FeatureVector(self.X.shape[1],
                             tuple(sorted(self.X.indices[start:stop].tolist())))

    def rows(self) -> Iterator[tuple[FeatureVector, str, float]]:
        for i in range(len(self)):
            yield self.feature_vector(i), self.venue_of(i), float(self.citations[i])


@dataclass(frozen=True)
class IngestConfig:
    venues: tuple[str, ...] = DEFAULT_VENUES
    year: int | None = None
    aliases: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_VENUE_ALIASES))
    fos_weight_threshold: float = 0.0


def read_records(source: str | os.PathLike | IO[str]) -> Iterator[dict]:
    """Yield record dicts from a JSON array or JSON-lines file.

    Malformed lines are skipped with a warning; the caller sees only
    well-formed objects.
    """
    if hasattr(source, "read"):
        yield from _records_from_stream(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            yield from _records_from_stream(fh)


def _records_from_stream(fh: IO[str]) -> Iterator[dict]:
    head = fh.read(1)
    while head and head.isspace():
        head = fh.read(1)
    if not head:
        return
    if head == "[":
        data = json.loads(head + fh.read())
        for rec in data:
            if isinstance(rec, dict):
                yield rec
            else:
                logger.warning("skipping non-object record: %r", rec)
    else:
        bad = 0
        for lineno, line in enumerate([head + fh.readline()] + fh.readlines(), start=1):
            line = line.strip().rstrip(",")
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                bad += 1
                logger.warning("skipping malformed JSON on line %d", lineno)
                continue
            if isinstance(rec, dict):
                yield rec
            else:
                bad += 1
                logger.warning("skipping non-object record on line %d", lineno)
        if bad:
            logger.warning("skipped %d malformed lines in total", bad)


def _raw_venue(record: Mapping) -> str | None:
    venue = record.get("venue")
    if isinstance(venue, str):
        return venue
    if isinstance(venue, Mapping):
        raw = venue.get("raw") or venue.get("name")
        if isinstance(raw, str):
            return raw
    return None


def _field_names(record: Mapping, threshold: float) -> tuple[str, ...] | None:
    fos = record.get("fos", [])
    if fos is None:
        fos = []
    if not isinstance(fos, list):
        return None
    names = set()
    for entry in fos:
        if isinstance(entry, str):
            names.add(entry)
        elif isinstance(entry, Mapping) and isinstance(entry.get("name"), str):
            weight = entry.get("w", 1.0)
            if not isinstance(weight, (int, float)):
                return None
            if weight >= threshold:
                names.add(entry["name"])
        else:
            return None
    return tuple(sorted(names))


def ingest(raw_records: Iterable[Mapping], config: IngestConfig) -> list[Paper]:
    """Filter and normalize raw records into Paper objects.

    Keeps papers whose normalized venue is in the configured set and whose
    year matches the filter.  Malformed records are skipped with a logged
    warning and counted; ending up with zero papers is an error.
    """
    target = set(config.venues)
    papers: list[Paper] = []
    malformed = 0
    filtered = 0
    for record in raw_records:
        raw_venue = _raw_venue(record)
        fields = _field_names(record, config.fos_weight_threshold)
        citations = record.get("n_citation", record.get("citations"))
        year = record.get("year")
        paper_id = record.get("id")
        if raw_venue is None or fields is None or paper_id is None \
                or not isinstance(citations, int) or citations < 0 \
                or not isinstance(year, int):
            malformed += 1
            logger.warning("skipping malformed record (id=%r)", record.get("id"))
            continue
        venue = config.aliases.get(raw_venue.strip(), raw_venue.strip())
        if venue not in target or (config.year is not None and year != config.year):
            filtered += 1
            continue
        papers.append(Paper(id=str(paper_id), fields_of_study=fields,
                            venue=venue, citations=citations, year=year))
    logger.info("ingest: kept %d papers, filtered %d, skipped %d malformed",
                len(papers), filtered, malformed)
    if not papers:
        raise EmptyDatasetError(
            f"no papers left after filtering (venues={sorted(target)}, "
            f"year={config.year}, malformed={malformed})")
    return papers


def build_features(papers: list[Paper],
                   venue_order: tuple[str, ...] | None = None) -> Dataset:
    """Build the vocabulary (lexicographically sorted union of fields) and
    the binary feature matrix.  ``venue_order`` fixes the venue list; by
    default venues are sorted for determinism."""
    if not papers:
        raise EmptyDatasetError("cannot build features from an empty paper list")
    observed = sorted({p.venue for p in papers})
    if venue_order is None:
        venues = tuple(observed)
    else:
        missing = set(observed) - set(venue_order)
        if missing:
            raise ValueError(f"papers reference venues outside the given order: {sorted(missing)}")
        venues = tuple(venue_order)
    vocab = Vocabulary(sorted({f for p in papers for f in p.fields_of_study}))
    venue_pos = {v: i for i, v in enumerate(venues)}

    indptr = [0]
    indices: list[int] = []
    for p in papers:
        active = sorted({vocab.index_of(f) for f in p.fields_of_study})
        indices.extend(active)
        indptr.append(len(indices))
    X = sp.csr_matrix(
        (np.ones(len(indices)), np.array(indices, dtype=np.int32),
         np.array(indptr, dtype=np.int32)),
        shape=(len(papers), len(vocab)),
    )
    return Dataset(
        ids=tuple(p.id for p in papers),
        X=X,
        venue_index=np.array([venue_pos[p.venue] for p in papers], dtype=np.int64),
        citations=np.array([p.citations for p in papers], dtype=np.float64),
        venues=venues,
        vocabulary=vocab,
    )


def stratified_fold_ids(dataset: Dataset, folds: int, seed: int,
                        salt: int) -> np.ndarray:
    """Per-venue seeded round-robin fold assignment, one id per row."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    fold_id = np.empty(len(dataset), dtype=np.int64)
    for pos in range(dataset.n_venues):
        rows = dataset.rows_for_venue(pos)
        rng = np.random.default_rng([seed, salt, pos])
        shuffled = rows[rng.permutation(rows.shape[0])]
        fold_id[shuffled] = np.arange(shuffled.shape[0]) % folds
    return fold_id


def stratified_split(dataset: Dataset, train_fraction: float,
                     seed: int) -> tuple[Dataset, Dataset]:
    """Seeded per-venue split.

    Per venue, ``floor(train_fraction * n)`` papers (at least 1) go to the
    training side after a seeded shuffle.  For bag data the vocabulary is
    rebuilt from the training side only and test vectors are re-projected
    onto it, dropping unseen fields; dense data keeps its coordinates.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    train_rows: list[int] = []
    test_rows: list[int] = []
    for pos, venue in enumerate(dataset.venues):
        rows = dataset.rows_for_venue(pos)
        if rows.shape[0] < 2:
            raise SplitError(f"venue {venue!r} has {rows.shape[0]} papers; need >= 2 to split")
        rng = np.random.default_rng([seed, pos])
        shuffled = rows[rng.permutation(rows.shape[0])]
        n_train = max(1, math.floor(train_fraction * rows.shape[0]))
        train_rows.extend(shuffled[:n_train].tolist())
        test_rows.extend(shuffled[n_train:].tolist())
    train_rows.sort()
    test_rows.sort()

    if dataset.kind == "dense":
        return (_dense_subset(dataset, train_rows),
                _dense_subset(dataset, test_rows))

    train_fields = sorted({
        dataset.vocabulary.field_at(j)
        for j in np.unique(dataset.X[train_rows].indices)
    })
    vocab = Vocabulary(train_fields, built_from=f"train:seed={seed}")
    train = _project_sparse(dataset, train_rows, vocab)
    test = _project_sparse(dataset, test_rows, vocab)
    dropped = int(dataset.X[test_rows].nnz - test.X.nnz)
    if dropped:
        logger.info("split: dropped %d test feature activations outside the "
                    "training vocabulary", dropped)
    return train, test


def _project_sparse(dataset: Dataset, rows: list[int], vocab: Vocabulary) -> Dataset:
    old = dataset.vocabulary
    mapping = np.full(len(old), -1, dtype=np.int64)
    for j, name in enumerate(old.fields):
        if name in vocab:
            mapping[j] = vocab.index_of(name)
    sub = dataset.X[rows].tocoo()
    keep = mapping[sub.col] >= 0
    X = sp.csr_matrix(
        (sub.data[keep], (sub.row[keep], mapping[sub.col[keep]])),
        shape=(len(rows), len(vocab)),
    )
    X.sort_indices()
    return Dataset(
        ids=tuple(dataset.ids[i] for i in rows),
        X=X,
        venue_index=dataset.venue_index[rows].copy(),
        citations=dataset.citations[rows].copy(),
        venues=dataset.venues,
        vocabulary=vocab,
        kind="sparse",
    )


def _dense_subset(dataset: Dataset, rows: list[int]) -> Dataset:
    return Dataset(
        ids=tuple(dataset.ids[i] for i in rows),
        X=np.asarray(dataset.X)[rows].copy(),
        venue_index=dataset.venue_index[rows].copy(),
        citations=dataset.citations[rows].copy(),
        venues=dataset.venues,
        vocabulary=dataset.vocabulary,
        kind="dense",
    )


def canonical_json_bytes(payload) -> bytes:
    """Canonical serialization: sorted keys, no whitespace, exact floats."""
    return (json.dumps(payload, sort_keys=True, ensure_ascii=False,
                       separators=(",", ":"), allow_nan=False) + "\n").encode("utf-8")


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_payload(dataset: Dataset) -> dict:
    payload = {
        "format_version": DATASET_FORMAT_VERSION,
        "kind": dataset.kind,
        "venues": list(dataset.venues),
        "vocabulary": list(dataset.vocabulary.fields),
        "vocabulary_built_from": dataset.vocabulary.built_from,
        "papers": [],
    }
    for i, paper_id in enumerate(dataset.ids):
        row: dict = {
            "id": paper_id,
            "venue": int(dataset.venue_index[i]),
            "citations": float(dataset.citations[i]),
        }
        if dataset.kind == "sparse":
            start, stop = dataset.X.indptr[i], dataset.X.indptr[i + 1]
            row["fields"] = sorted(int(j) for j in dataset.X.indices[start:stop])
        else:
            row["x"] = [float(v) for v in np.asarray(dataset.X)[i]]
        payload["papers"].append(row)
    return payload


def dataset_fingerprint(dataset: Dataset) -> str:
    return sha256(canonical_json_bytes(dataset_payload(dataset))).hexdigest()


def save_dataset(dataset: Dataset, path: str | os.PathLike) -> None:
    atomic_write_bytes(path, canonical_json_bytes(dataset_payload(dataset)))


def load_dataset(path: str | os.PathLike) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise DatasetFormatError(f"{path}: not a dataset file")
    if payload["format_version"] != DATASET_FORMAT_VERSION:
        raise DatasetFormatError(
            f"{path}: unsupported format_version {payload['format_version']!r}")
    vocab = Vocabulary(payload["vocabulary"],
                       built_from=payload.get("vocabulary_built_from", "full"))
    venues = tuple(payload["venues"])
    papers = payload["papers"]
    kind = payload.get("kind", "sparse")
    n = len(papers)
    venue_index = np.array([p["venue"] for p in papers], dtype=np.int64)
    citations = np.array([p["citations"] for p in papers], dtype=np.float64)
    if kind == "sparse":
        indptr = [0]
        indices: list[int] = []
        for p in papers:
            indices.extend(p["fields"])
            indptr.append(len(indices))
        X = sp.csr_matrix(
            (np.ones(len(indices)), np.array(indices, dtype=np.int32),
             np.array(indptr, dtype=np.int32)),
            shape=(n, len(vocab)),
        )
    else:
        X = np.array([p["x"] for p in papers], dtype=np.float64)
    return Dataset(
        ids=tuple(str(p["id"]) for p in papers),
        X=X,
        venue_index=venue_index,
        citations=citations,
        venues=venues,
        vocabulary=vocab,
        kind=kind,
    )


def mini_fixture_path() -> str:
    """Path of the bundled 200-paper miniature corpus (dblp-shaped records)."""
    return str(resources.files("venuelift").joinpath("data/mini_dblp.jsonl"))
