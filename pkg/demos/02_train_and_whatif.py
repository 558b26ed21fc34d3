"""
Train a venue recommender and ask what-if questions
===================================================

The estimator answers: "how many citations would this paper collect if it
were published at venue t?" for every venue, using one ridge regressor per
venue trained on log targets.  Because venue assignment depends on content,
each regressor reweights its training papers by inverse estimated
propensity, so papers that look unusual for their venue count more and the
per-venue models stop mirroring the selection process.
"""

from venuelift.dataset import (IngestConfig, build_features, ingest,
                               mini_fixture_path, read_records,
                               stratified_split)
from venuelift.learners import TrainConfig, coefficients, train
from venuelift.service import recommend_response, save_model

papers = ingest(read_records(mini_fixture_path()), IngestConfig(year=2015))
dataset = build_features(papers)
train_set, test_set = stratified_split(dataset, 0.7, seed=0)

# One model per venue ("T"), inverse-propensity weighting, hyperparameters
# cross-validated per venue.  The small grid keeps this demo quick; the
# default grid spans 0.001..90 in 45 steps.
config = TrainConfig(learner_kind="T", weighting="ipw",
                     lambda_grid=(0.01, 0.1, 1.0, 10.0, 100.0), cv_folds=3)
model = train(train_set, config)

print(f"trained on {len(train_set)} papers, {model.n_features} features")
print(f"ridge strength per venue: {model.per_venue_lambda}")
print(f"propensity C: {model.propensity.chosen_c}\n")

# Score one held-out paper across all venues.  `scores` live on the model's
# log target scale; `predicted_citations` are mapped back to citations.
x, venue, citations = next(test_set.rows())
fields = [model.vocabulary.field_at(i) for i in x.active_indices]
base = recommend_response(model, fields)
print(f"factual venue {venue}, factual citations {citations:.0f}")
for v in model.venues:
    marker = " <- recommended" if v == base["recommended"] else ""
    print(f"  {v:<8} {base['predicted_citations'][v]:8.1f}{marker}")

# What-if: add a field and watch the scores move.  The model is linear in
# the fields, so adding one field shifts a venue's score by exactly that
# field's coefficient there.
best_venue = base["recommended"]
field, weight = next((f, w) for f, w in coefficients(model, best_venue, 10)
                     if f not in fields)
variant = recommend_response(model, fields + [field])
delta = variant["scores"][best_venue] - base["scores"][best_venue]
print(f"\nadding {field!r} moves the {best_venue} log score by {delta:+.4f}"
      f" (its coefficient there is {weight:+.4f})")

# Freeze the model for the HTTP service; then explore interactively with
#   venuelift serve --model demo-model.json --bind 127.0.0.1:8355
save_model(model, "demo-model.json")
print("\nwrote demo-model.json")
