"""Generate the bundled 200-paper miniature corpus.

Writes src/venuelift/data/mini_dblp.jsonl: 40 papers per venue from 2015
in the dblp record shape, with venue-dependent field mixtures (so venue
distributions differ detectably) and a citation signal concentrated on a
few high-impact fields.  A handful of extra records exercise the ingest
filters: an off-year paper, an unknown venue, a missing citation count,
and one malformed line.

Run from the repository root:

    python3 tools/generate_fixture.py
"""

import json
import os

import numpy as np

VENUES = ("AAAI", "IJCAI", "KDD", "NeurIPS", "ICML")
PAPERS_PER_VENUE = 40
YEAR = 2015
SEED = 74120

COMMON_FIELDS = (
    "Artificial intelligence", "Machine learning", "Algorithm",
    "Mathematical optimization", "Computer science", "Experiment",
    "Benchmark (computing)", "Feature vector", "Supervised learning",
    "Regression analysis",
)

# Venue-flavored pools; overlaps are intentional so venues are separable
# only statistically, never perfectly.
VENUE_FIELDS = {
    "AAAI": (
        "Heuristic search", "Automated planning", "Knowledge representation",
        "Constraint satisfaction", "Game theory", "Multi-agent system",
        "Satisfiability", "Reasoning system", "Natural language processing",
        "Markov decision process", "Reinforcement learning", "Ontology",
    ),
    "IJCAI": (
        "Game theory", "Multi-agent system", "Constraint satisfaction",
        "Automated planning", "Belief revision", "Argumentation framework",
        "Natural language processing", "Mechanism design", "Satisfiability",
        "Epistemic logic", "Preference elicitation", "Heuristic search",
    ),
    "KDD": (
        "Data mining", "Cluster analysis", "Anomaly detection",
        "Recommender system", "Social network analysis", "Graph mining",
        "Matrix factorization", "Scalability", "Feature selection",
        "Time series", "Text mining", "Crowdsourcing",
    ),
    "NeurIPS": (
        "Deep learning", "Artificial neural network", "Generative model",
        "Stochastic gradient descent", "Convex optimization", "Kernel method",
        "Bayesian inference", "Reinforcement learning", "Variational inference",
        "Gaussian process", "Online learning", "Convolutional neural network",
    ),
    "ICML": (
        "Deep learning", "Stochastic gradient descent", "Convex optimization",
        "Online learning", "Kernel method", "Reinforcement learning",
        "Artificial neural network", "Semi-supervised learning", "Boosting",
        "Dimensionality reduction", "Spectral clustering", "Generative model",
    ),
}

# Citation lift per field, applied on a log scale.
FIELD_IMPACT = {
    "Deep learning": 1.6,
    "Artificial neural network": 1.1,
    "Convolutional neural network": 1.0,
    "Generative model": 0.8,
    "Recommender system": 0.7,
    "Reinforcement learning": 0.6,
    "Data mining": 0.5,
    "Stochastic gradient descent": 0.4,
    "Satisfiability": -0.4,
    "Epistemic logic": -0.6,
    "Belief revision": -0.5,
}

VENUE_BASE = {"AAAI": 1.6, "IJCAI": 1.5, "KDD": 2.3, "NeurIPS": 2.5, "ICML": 2.4}


def make_paper(rng, venue, serial):
    n_flavored = int(rng.integers(2, 6))
    n_common = int(rng.integers(1, 4))
    flavored = rng.choice(VENUE_FIELDS[venue], size=n_flavored, replace=False)
    common = rng.choice(COMMON_FIELDS, size=n_common, replace=False)
    names = sorted(set(flavored.tolist()) | set(common.tolist()))

    log_rate = VENUE_BASE[venue] + sum(FIELD_IMPACT.get(f, 0.0) for f in names)
    log_rate += rng.normal(0.0, 0.55)
    citations = int(rng.poisson(np.exp(log_rate)))

    raw_venue = venue
    if venue == "NeurIPS" and serial % 3 == 0:
        raw_venue = "NIPS"
    record = {
        "id": str(2157000000 + serial),
        "title": f"{venue} study {serial}",
        "year": YEAR,
        "venue": {"raw": raw_venue},
        "fos": [{"name": f, "w": round(float(rng.uniform(0.3, 0.7)), 4)}
                for f in names],
        "n_citation": citations,
    }
    # A few records use the plain-string venue / plain-string fos shapes
    # that also occur in the wild.
    if serial % 17 == 0:
        record["venue"] = raw_venue
    if serial % 23 == 0:
        record["fos"] = names
    return record


def main():
    rng = np.random.default_rng(SEED)
    records = []
    serial = 0
    for venue in VENUES:
        for _ in range(PAPERS_PER_VENUE):
            records.append(make_paper(rng, venue, serial))
            serial += 1

    # Records the ingest filters must drop.
    chaff = [
        {"id": "900000001", "title": "late study", "year": 2016,
         "venue": {"raw": "KDD"}, "fos": ["Data mining"], "n_citation": 3},
        {"id": "900000002", "title": "out of scope", "year": YEAR,
         "venue": {"raw": "ICLR"}, "fos": ["Deep learning"], "n_citation": 40},
        {"id": "900000003", "title": "uncounted", "year": YEAR,
         "venue": {"raw": "AAAI"}, "fos": ["Game theory"]},
    ]
    positions = {50: chaff[0], 120: chaff[1], 170: chaff[2]}

    out = os.path.join(os.path.dirname(__file__), os.pardir,
                       "src", "venuelift", "data", "mini_dblp.jsonl")
    out = os.path.normpath(out)
    os.makedirs(os.path.dirname(out), exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for i, record in enumerate(records):
            if i in positions:
                fh.write(json.dumps(positions[i], ensure_ascii=False) + "\n")
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            if i == 90:
                fh.write('{"id": "900000004", "broken\n')
    print(f"wrote {out}: {len(records)} papers + {len(positions) + 1} chaff records")


if __name__ == "__main__":
    main()
