"""Model persistence and the read-only what-if HTTP service.

A trained model is frozen into a single canonical JSON artifact: sorted
keys, no whitespace, floats at full round-trip precision.  Loading it back
reproduces predictions bit for bit, and re-saving a loaded model yields the
identical file.  The FastAPI app wraps one such artifact and exposes
recommendation, counterfactual what-if deltas, coefficients, and the
vocabulary over ``/v1`` endpoints.  The model is immutable after load, so
every response is a pure function of (artifact, request body).
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field, model_validator

from .dataset import (Dataset, Vocabulary, atomic_write_bytes,
                      canonical_json_bytes, dataset_fingerprint)
from .learners import (Recommendation, TrainConfig, TrainedModel,
                       coefficients, recommend, venue_offsets)
from .numeric import LinearModel, MultinomialLogisticModel
from .propensity import PropensityModel

MODEL_FORMAT_VERSION = 1

VOCABULARY_PAGE_LIMIT = 500


class ModelFormatError(ValueError):
    """A model file does not match the expected schema or version."""


@dataclass(frozen=True)
class ModelFile:
    """A trained model together with its artifact metadata."""

    model: TrainedModel
    format_version: int = MODEL_FORMAT_VERSION
    created_at: str | None = None

    def payload(self) -> dict:
        return model_payload(self.model, created_at=self.created_at)


def _linear_payload(learner: LinearModel) -> dict:
    return {
        "weights": learner.weights.tolist(),
        "intercept": float(learner.intercept),
        "regularization": float(learner.regularization),
        "solver": learner.solver,
        "singular": bool(learner.singular),
    }


def _propensity_payload(prop: PropensityModel | None) -> dict | None:
    if prop is None:
        return None
    logistic = prop.logistic
    return {
        "class_weights": logistic.class_weights.tolist(),
        "class_intercepts": logistic.class_intercepts.tolist(),
        "inverse_regularization": float(logistic.inverse_regularization),
        "class_order": [int(c) for c in logistic.class_order],
        "achieved_grad_norm": float(logistic.achieved_grad_norm),
        "converged": bool(logistic.converged),
        "n_iter": int(logistic.n_iter),
        "clip_floor": float(prop.clip_floor),
        "venues": list(prop.venues),
        "cv_log_loss": [[float(c), float(loss)] for c, loss in prop.cv_log_loss],
    }


def model_payload(model: TrainedModel, created_at: str | None = None) -> dict:
    """JSON-ready dict capturing everything `load_model` needs."""
    config = model.config
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "created_at": created_at,
        "learner_kind": model.learner_kind,
        "venues": list(model.venues),
        "vocabulary": list(model.vocabulary.fields),
        "vocabulary_built_from": model.vocabulary.built_from,
        "config": {
            "learner_kind": config.learner_kind,
            "weighting": config.weighting,
            "lambda_grid": [float(v) for v in config.lambda_grid],
            "cv_folds": int(config.cv_folds),
            "target_transform": config.target_transform,
            "seed": int(config.seed),
            "propensity_c_grid": [float(v) for v in config.propensity_c_grid],
            "propensity_clip_floor": float(config.propensity_clip_floor),
        },
        "base_learners": [_linear_payload(bl) for bl in model.base_learners],
        "per_venue_lambda": {v: float(lam)
                             for v, lam in model.per_venue_lambda.items()},
        "propensity": _propensity_payload(model.propensity),
        "dataset_fingerprint": model.dataset_fingerprint,
    }


def save_model(model: TrainedModel, path: str | os.PathLike,
               created_at: str | None = None) -> None:
    """Write the model as canonical JSON, atomically.

    `created_at` defaults to None so that identical models produce
    byte-identical artifacts; pass a timestamp string to record one.
    """
    atomic_write_bytes(path, canonical_json_bytes(
        model_payload(model, created_at=created_at)))


def _rebuild_propensity(payload: dict | None) -> PropensityModel | None:
    if payload is None:
        return None
    logistic = MultinomialLogisticModel(
        class_weights=np.array(payload["class_weights"], dtype=np.float64),
        class_intercepts=np.array(payload["class_intercepts"], dtype=np.float64),
        inverse_regularization=float(payload["inverse_regularization"]),
        class_order=tuple(payload["class_order"]),
        achieved_grad_norm=float(payload["achieved_grad_norm"]),
        converged=bool(payload["converged"]),
        n_iter=int(payload["n_iter"]),
    )
    return PropensityModel(
        logistic=logistic,
        clip_floor=float(payload["clip_floor"]),
        venues=tuple(payload["venues"]),
        cv_log_loss=tuple((float(c), float(loss))
                          for c, loss in payload["cv_log_loss"]),
    )


def load_model(path: str | os.PathLike) -> ModelFile:
    """Parse a model artifact; wrong version or schema raises ModelFormatError."""
    path = os.fspath(path)
    with open(path, "rb") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise ModelFormatError(f"{path}: expected a JSON object at top level")
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format_version {version!r}, "
            f"expected {MODEL_FORMAT_VERSION}")
    try:
        config = TrainConfig(
            learner_kind=payload["config"]["learner_kind"],
            weighting=payload["config"]["weighting"],
            lambda_grid=tuple(payload["config"]["lambda_grid"]),
            cv_folds=payload["config"]["cv_folds"],
            target_transform=payload["config"]["target_transform"],
            seed=payload["config"]["seed"],
            propensity_c_grid=tuple(payload["config"]["propensity_c_grid"]),
            propensity_clip_floor=payload["config"]["propensity_clip_floor"],
        )
        model = TrainedModel(
            venues=tuple(payload["venues"]),
            learner_kind=payload["learner_kind"],
            base_learners=tuple(
                LinearModel(weights=np.array(bl["weights"], dtype=np.float64),
                            intercept=float(bl["intercept"]),
                            regularization=float(bl["regularization"]),
                            solver=bl["solver"],
                            singular=bool(bl["singular"]))
                for bl in payload["base_learners"]),
            propensity=_rebuild_propensity(payload["propensity"]),
            vocabulary=Vocabulary(payload["vocabulary"],
                                  built_from=payload["vocabulary_built_from"]),
            config=config,
            per_venue_lambda={v: float(lam)
                              for v, lam in payload["per_venue_lambda"].items()},
            diagnostics={},
            dataset_fingerprint=payload["dataset_fingerprint"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"{path}: malformed model file ({exc})") from exc
    return ModelFile(model=model, format_version=version,
                     created_at=payload["created_at"])


def check_fingerprint(model: TrainedModel, dataset: Dataset) -> bool:
    """True when the dataset is the one the model was trained from; a
    mismatch warns (scores remain valid, provenance does not)."""
    observed = dataset_fingerprint(dataset)
    if observed == model.dataset_fingerprint:
        return True
    warnings.warn(
        f"dataset fingerprint {observed[:12]}... does not match the model's "
        f"training fingerprint {model.dataset_fingerprint[:12]}...",
        UserWarning, stacklevel=2)
    return False


class RecommendRequest(BaseModel):
    fields: list[str] = Field(default_factory=list)


class WhatIfRequest(BaseModel):
    base_fields: list[str] = Field(default_factory=list)
    add: list[str] = Field(default_factory=list)
    remove: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _disjoint(self):
        overlap = sorted(set(self.add) & set(self.remove))
        if overlap:
            raise ValueError(f"add and remove overlap on {overlap}")
        return self


def recommendation_body(rec: Recommendation) -> dict:
    return {
        "scores": rec.scores,
        "predicted_citations": rec.predicted_citations,
        "recommended": rec.recommended,
        "ranking": list(rec.ranking),
    }


def _dedupe(names) -> list[str]:
    return list(dict.fromkeys(names))


def recommend_response(model: TrainedModel, fields: list[str]) -> dict:
    """One recommendation body; the CLI and the HTTP endpoint both call this,
    so their outputs agree field for field."""
    x, ignored = model.vocabulary.encode(_dedupe(fields))
    body = recommendation_body(recommend(model, x))
    body["ignored_fields"] = ignored
    return body


def coefficients_response(model: TrainedModel, venue: str, top: int) -> dict:
    pairs = coefficients(model, venue, top_k=top)
    body = {
        "venue": venue,
        "learner_kind": model.learner_kind,
        "coefficients": [{"field": f, "weight": w} for f, w in pairs],
    }
    offsets = venue_offsets(model)
    if offsets:
        body["venue_offset"] = offsets[venue]
    return body


def create_app(model_file: ModelFile) -> FastAPI:
    """HTTP facade over one immutable model; handlers share no mutable state."""
    model = model_file.model
    vocabulary = model.vocabulary
    app = FastAPI(title="venuelift what-if service", docs_url=None,
                  redoc_url=None)
    app.state.model_file = model_file
    # the browser explorer is served as static files from another origin;
    # the API is read-only and unauthenticated, so a blanket allow is safe
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["GET", "POST"], allow_headers=["*"])

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "model_version": model_file.format_version}

    @app.get("/v1/venues")
    def venues() -> dict:
        return {"venues": list(model.venues)}

    @app.get("/v1/vocabulary")
    def vocabulary_page(
        q: str = Query(default="", max_length=200),
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=50, ge=1, le=VOCABULARY_PAGE_LIMIT),
    ) -> dict:
        needle = q.lower()
        matches = [f for f in vocabulary.fields if needle in f.lower()] \
            if needle else list(vocabulary.fields)
        return {
            "total": len(matches),
            "offset": offset,
            "limit": limit,
            "fields": matches[offset:offset + limit],
        }

    @app.get("/v1/coefficients/{venue}")
    def venue_coefficients(venue: str,
                           top: int = Query(default=30, ge=1)) -> dict:
        if venue not in model.venues:
            raise HTTPException(status_code=404,
                                detail=f"unknown venue {venue!r}")
        return coefficients_response(model, venue, top)

    @app.post("/v1/recommend")
    def recommend_endpoint(request: RecommendRequest) -> dict:
        return recommend_response(model, request.fields)

    @app.post("/v1/whatif")
    def whatif_endpoint(request: WhatIfRequest) -> dict:
        base_fields = _dedupe(request.base_fields)
        removed = set(request.remove)
        variant_fields = _dedupe(
            [f for f in base_fields if f not in removed] + request.add)
        x_base, ignored_base = vocabulary.encode(base_fields)
        x_variant, ignored_variant = vocabulary.encode(variant_fields)
        base = recommend(model, x_base)
        variant = recommend(model, x_variant)
        ignored = _dedupe(ignored_base + ignored_variant +
                          [f for f in request.remove if f not in vocabulary])
        return {
            "base": recommendation_body(base),
            "variant": recommendation_body(variant),
            "deltas": {v: variant.scores[v] - base.scores[v]
                       for v in model.venues},
            "citation_deltas": {
                v: variant.predicted_citations[v] - base.predicted_citations[v]
                for v in model.venues},
            "ignored_fields": ignored,
        }

    @app.get("/v1/model")
    def model_metadata() -> dict:
        prop = model.propensity
        return {
            "format_version": model_file.format_version,
            "created_at": model_file.created_at,
            "learner_kind": model.learner_kind,
            "weighting": model.config.weighting,
            "target_transform": model.config.target_transform,
            "venues": list(model.venues),
            "n_features": model.n_features,
            "vocabulary_built_from": vocabulary.built_from,
            "per_venue_lambda": dict(model.per_venue_lambda),
            "propensity": None if prop is None else {
                "chosen_c": prop.chosen_c,
                "clip_floor": prop.clip_floor,
                "converged": prop.logistic.converged,
            },
            "dataset_fingerprint": model.dataset_fingerprint,
        }

    return app


def parse_bind(bind_address: str) -> tuple[str, int]:
    """Split "host:port"; the port must be a non-privileged-friendly integer."""
    host, sep, port_text = bind_address.rpartition(":")
    if not sep or not host:
        raise ValueError(f"bind address {bind_address!r} must look like "
                         f"HOST:PORT")
    try:
        port = int(port_text)
    except ValueError:
        raise ValueError(f"bind address {bind_address!r} has a non-integer "
                         f"port") from None
    if not 0 < port < 65536:
        raise ValueError(f"port {port} out of range")
    return host, port


def serve(model_path: str | os.PathLike, bind_address: str) -> None:
    """Load the artifact (refusing malformed files) and block serving HTTP."""
    model_file = load_model(model_path)
    host, port = parse_bind(bind_address)
    import uvicorn

    uvicorn.run(create_app(model_file), host=host, port=port,
                log_level="warning")
