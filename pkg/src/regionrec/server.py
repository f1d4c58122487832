"""HTTP JSON API over the recommendation engine.

The app serves an immutable engine snapshot (region table, registry, review
counts, and one trained model bundle per level) held on ``app.state``;
swapping in a new snapshot is a single attribute assignment, so requests
never observe a half-loaded engine and identical requests always produce
identical responses. No user state lives server-side: clients resubmit
their full preference set on every call.

Every non-2xx response body has the shape
``{"code": "VALIDATION" | "NOT_FOUND" | "INTERNAL", "message": str,
"field": optional str}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .core import (
    ConfigError,
    DimensionRegistry,
    EngineConfig,
    Level,
    ReferentialError,
    RegionId,
    RegionRecord,
    RegionrecError,
    ValidationError,
)
from .explain import LimeConfig
from .ingest import (
    RegionTable,
    ReviewLog,
    attach_review_counts,
    load_regions,
    load_reviews,
)
from .recsys import (
    BUNDLE_VERSION,
    ModelBundle,
    PreferenceInput,
    describe_region,
    load_bundle,
    popular_regions,
    recommend_cities,
    recommend_neighborhoods,
    recommendation_to_dict,
    region_description_prompt,
)

CITY_BUNDLE_FILENAME = "city.bundle.json"
NEIGHBORHOOD_BUNDLE_FILENAME = "neighborhood.bundle.json"
REGIONS_FILENAME = "regions.csv"
REVIEWS_FILENAME = "reviews.csv"


class ApiException(RegionrecError):
    """Endpoint-level error carrying its exact wire representation."""

    def __init__(
        self,
        status: int,
        code: str,
        message: str,
        field: Optional[str] = None,
    ) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.field = field


@dataclass(frozen=True)
class Engine:
    """Immutable snapshot the endpoints read from."""

    regions: RegionTable
    registry: DimensionRegistry
    log: ReviewLog
    config: EngineConfig
    city_bundle: Optional[ModelBundle] = None
    neighborhood_bundle: Optional[ModelBundle] = None
    lime_config: Optional[LimeConfig] = None

    @property
    def missing_models(self) -> list[str]:
        missing = []
        if self.city_bundle is None:
            missing.append("city_model")
        if self.neighborhood_bundle is None:
            missing.append("neighborhood_model")
        return missing

    @property
    def status(self) -> str:
        return "degraded" if self.missing_models else "ready"


def load_engine(
    data_dir: str | Path,
    models_dir: Optional[str | Path] = None,
    config: Optional[EngineConfig] = None,
    lime_config: Optional[LimeConfig] = None,
) -> Engine:
    """Build an engine snapshot from a data directory and model bundles.

    Missing bundle files leave that level's model unloaded (health reports
    "degraded"); a missing region table is an error.
    """
    data_dir = Path(data_dir)
    regions, registry = load_regions(data_dir / REGIONS_FILENAME)
    log = load_reviews(data_dir / REVIEWS_FILENAME, regions)
    regions = attach_review_counts(regions, log)
    city_bundle = neighborhood_bundle = None
    if models_dir is not None:
        models_dir = Path(models_dir)
        city_path = models_dir / CITY_BUNDLE_FILENAME
        neighborhood_path = models_dir / NEIGHBORHOOD_BUNDLE_FILENAME
        if city_path.exists():
            city_bundle = load_bundle(city_path)
        if neighborhood_path.exists():
            neighborhood_bundle = load_bundle(neighborhood_path)
    return Engine(
        regions=regions,
        registry=registry,
        log=log,
        config=config or EngineConfig(),
        city_bundle=city_bundle,
        neighborhood_bundle=neighborhood_bundle,
        lime_config=lime_config,
    )


def create_app(
    engine: Optional[Engine] = None,
    cors_origins: tuple[str, ...] = ("*",),
) -> FastAPI:
    app = FastAPI(title="regionrec", docs_url=None, redoc_url=None)
    app.state.engine = engine
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    _register_handlers(app)
    _register_routes(app)
    return app


# ---------------------------------------------------------------------------
# Error plumbing


def _error_response(
    status: int, code: str, message: str, field: Optional[str] = None
) -> JSONResponse:
    body: dict = {"code": code, "message": message}
    if field is not None:
        body["field"] = field
    return JSONResponse(status_code=status, content=body)


def _register_handlers(app: FastAPI) -> None:
    @app.exception_handler(ApiException)
    async def _api_exception(request: Request, exc: ApiException) -> JSONResponse:
        return _error_response(exc.status, exc.code, str(exc), exc.field)

    @app.exception_handler(ValidationError)
    @app.exception_handler(ConfigError)
    async def _validation(request: Request, exc: RegionrecError) -> JSONResponse:
        return _error_response(400, "VALIDATION", str(exc))

    @app.exception_handler(ReferentialError)
    async def _not_found(request: Request, exc: ReferentialError) -> JSONResponse:
        return _error_response(404, "NOT_FOUND", str(exc))

    @app.exception_handler(RegionrecError)
    async def _domain_error(request: Request, exc: RegionrecError) -> JSONResponse:
        return _error_response(500, "INTERNAL", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _bad_body(
        request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        return _error_response(
            400, "VALIDATION", "request body must be a JSON object"
        )

    @app.exception_handler(Exception)
    async def _unexpected(request: Request, exc: Exception) -> JSONResponse:
        return _error_response(500, "INTERNAL", "internal error")


def _require_engine(request: Request) -> Engine:
    engine = request.app.state.engine
    if engine is None:
        raise ApiException(503, "INTERNAL", "engine is starting")
    return engine


def _require_bundle(engine: Engine, level: Level) -> ModelBundle:
    bundle = (
        engine.city_bundle
        if level is Level.CITY
        else engine.neighborhood_bundle
    )
    if bundle is None:
        raise ApiException(
            503, "INTERNAL", f"{level.value} model is not loaded"
        )
    return bundle


def _string_list(body: dict, key: str, default: Optional[list] = None) -> list[str]:
    value = body.get(key, default)
    if value is None:
        raise ApiException(
            400, "VALIDATION", f"field {key!r} is required", field=key
        )
    if not isinstance(value, list) or not all(
        isinstance(v, str) and v for v in value
    ):
        raise ApiException(
            400,
            "VALIDATION",
            f"field {key!r} must be a list of non-empty strings",
            field=key,
        )
    return value


def _resolve_codes(
    engine: Engine,
    codes: list[str],
    level: Level,
    field: str,
) -> list[RegionId]:
    resolved = []
    index = {
        rid.code: rid for rid in engine.regions if rid.level is level
    }
    for code in codes:
        rid = index.get(code)
        if rid is None:
            raise ApiException(
                404,
                "NOT_FOUND",
                f"unknown {level.value} code {code!r}",
                field=field,
            )
        resolved.append(rid)
    return resolved


# ---------------------------------------------------------------------------
# Payload shaping


def _city_summary(record: RegionRecord) -> dict:
    return {
        "code": record.id.code,
        "name": record.name,
        "description": record.description,
        "image_url": record.image_url,
        "centroid": {
            "lat": record.attributes.centroid_lat,
            "lon": record.attributes.centroid_lon,
        },
        "total_reviews": record.total_reviews,
    }


def _neighborhood_summary(engine: Engine, record: RegionRecord) -> dict:
    return {
        "code": record.id.code,
        "parent_city": record.id.parent_city,
        "name": record.name,
        "description": describe_region(record, engine.registry),
        "description_prompt": region_description_prompt(record, engine.registry),
        "image_url": record.image_url,
        "centroid": {
            "lat": record.attributes.centroid_lat,
            "lon": record.attributes.centroid_lon,
        },
        "total_reviews": record.total_reviews,
    }


# ---------------------------------------------------------------------------
# Routes


def _register_routes(app: FastAPI) -> None:
    @app.get("/api/cities")
    def list_cities(request: Request) -> list[dict]:
        engine = _require_engine(request)
        records = popular_regions(
            engine.regions, Level.CITY, engine.config.n_popular_cities
        )
        return [_city_summary(r) for r in records]

    @app.get("/api/cities/{code}/neighborhoods")
    def list_neighborhoods(request: Request, code: str) -> list[dict]:
        engine = _require_engine(request)
        if RegionId(level=Level.CITY, code=code) not in engine.regions:
            raise ApiException(
                404, "NOT_FOUND", f"unknown city code {code!r}"
            )
        records = popular_regions(
            engine.regions,
            Level.NEIGHBORHOOD,
            engine.config.n_popular_neighborhoods,
            city_scope=code,
        )
        return [_neighborhood_summary(engine, r) for r in records]

    @app.post("/api/recommendations/cities")
    def city_recommendations(request: Request, body: dict = Body(...)) -> dict:
        engine = _require_engine(request)
        bundle = _require_bundle(engine, Level.CITY)
        liked_codes = _string_list(body, "liked")
        disliked_codes = _string_list(body, "disliked", default=[])
        total = len(liked_codes) + len(disliked_codes)
        if total == 0:
            raise ApiException(
                400,
                "VALIDATION",
                "at least one labeled city is required",
                field="liked",
            )
        if total > 6:
            raise ApiException(
                400,
                "VALIDATION",
                f"at most 6 cities may be labeled, got {total}",
            )
        liked = _resolve_codes(engine, liked_codes, Level.CITY, "liked")
        disliked = _resolve_codes(engine, disliked_codes, Level.CITY, "disliked")
        if not liked:
            raise ApiException(
                400,
                "VALIDATION",
                "at least one liked city is required",
                field="liked",
            )
        pref = PreferenceInput(liked=tuple(liked), disliked=tuple(disliked))
        result = recommend_cities(
            pref,
            bundle,
            engine.regions,
            engine.registry,
            engine.config,
            engine.lime_config,
        )
        return {
            "recommendations": [
                recommendation_to_dict(r) for r in result.recommendations
            ],
            "flags": list(result.flags),
        }

    @app.post("/api/recommendations/neighborhoods")
    def neighborhood_recommendations(
        request: Request, body: dict = Body(...)
    ) -> dict:
        engine = _require_engine(request)
        bundle = _require_bundle(engine, Level.NEIGHBORHOOD)
        destination_code = body.get("destination")
        if not isinstance(destination_code, str) or not destination_code:
            raise ApiException(
                400,
                "VALIDATION",
                "field 'destination' must be a city code",
                field="destination",
            )
        if (
            RegionId(level=Level.CITY, code=destination_code)
            not in engine.regions
        ):
            raise ApiException(
                404,
                "NOT_FOUND",
                f"unknown city code {destination_code!r}",
                field="destination",
            )
        liked_codes = _string_list(body, "liked")
        disliked_codes = _string_list(body, "disliked", default=[])
        if not liked_codes:
            raise ApiException(
                400,
                "VALIDATION",
                "at least one liked neighborhood is required",
                field="liked",
            )
        liked = _resolve_codes(engine, liked_codes, Level.NEIGHBORHOOD, "liked")
        disliked = _resolve_codes(
            engine, disliked_codes, Level.NEIGHBORHOOD, "disliked"
        )
        pref = PreferenceInput(liked=tuple(liked), disliked=tuple(disliked))
        result = recommend_neighborhoods(
            RegionId(level=Level.CITY, code=destination_code),
            pref,
            bundle,
            engine.regions,
            engine.registry,
            engine.config,
            engine.lime_config,
        )
        return {
            "recommendations": [
                recommendation_to_dict(r) for r in result.recommendations
            ],
            "flags": list(result.flags),
        }

    @app.get("/api/health")
    def health(request: Request) -> dict:
        engine = request.app.state.engine
        if engine is None:
            return {
                "status": "starting",
                "model_versions": {"city": None, "neighborhood": None},
                "region_counts": {"city": 0, "neighborhood": 0},
            }
        counts = {
            "city": sum(1 for rid in engine.regions if rid.level is Level.CITY),
            "neighborhood": sum(
                1 for rid in engine.regions if rid.level is Level.NEIGHBORHOOD
            ),
        }
        versions = {
            "city": BUNDLE_VERSION if engine.city_bundle else None,
            "neighborhood": BUNDLE_VERSION
            if engine.neighborhood_bundle
            else None,
        }
        body: dict = {
            "status": engine.status,
            "model_versions": versions,
            "region_counts": counts,
        }
        if engine.missing_models:
            body["missing"] = engine.missing_models
        return body
