"""Counterfactual citation impact per publication venue.

Per-venue ridge regressors on log citation targets, trained with inverse
propensity weights to undo venue selection bias; kernel two-sample
diagnostics; a synthetic counterfactual benchmark; model persistence; an
HTTP what-if service; and a command line driving the whole pipeline.
"""
