"""Generate the model artifact the browser explorer tests run against.

Trains an IPW T-learner on the bundled miniature corpus with reduced
hyperparameter grids (the fixture has 200 papers; the full 45-value sweep
buys nothing here) and saves it to frontend/tests/fixture_model.json.  The
artifact is canonical JSON, so rerunning this script is a byte-identical
no-op unless the fixture corpus or the training code changed.

Run from the repository root:

    python3 tools/generate_frontend_fixture.py
"""

import os

from venuelift.dataset import (IngestConfig, build_features, ingest,
                               mini_fixture_path, read_records)
from venuelift.learners import TrainConfig, train
from venuelift.service import save_model

LAMBDA_GRID = (0.01, 1.0, 100.0)
C_GRID = (0.1, 1.0, 10.0)


def main():
    papers = ingest(read_records(mini_fixture_path()), IngestConfig(year=2015))
    dataset = build_features(papers)
    model = train(dataset, TrainConfig(
        learner_kind="T", weighting="ipw", lambda_grid=LAMBDA_GRID,
        propensity_c_grid=C_GRID, cv_folds=3, seed=0))

    out = os.path.join(os.path.dirname(__file__), os.pardir,
                       "frontend", "tests", "fixture_model.json")
    out = os.path.normpath(out)
    os.makedirs(os.path.dirname(out), exist_ok=True)
    save_model(model, out)
    print(f"wrote {out}: {len(model.venues)} venues, "
          f"{model.n_features} features")


if __name__ == "__main__":
    main()
