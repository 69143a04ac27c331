from flask import Flask
from flask_cors import CORS
from flask_limiter import Limiter
from flask_limiter.util import get_remote_address

from adapters.loggers.logger_adapter import app_logger


def _origins(app: Flask):
    origins = app.config.get("CORS_ORIGINS", "*")
    if origins == "*":
        return origins
    return [o.strip() for o in origins.split(",") if o.strip()]


def register_extensions(app: Flask) -> None:
    if app.config["TESTING"]:
        app_logger.debug("Testing mode: CORS and rate limiting disabled")
        return

    origins = _origins(app)
    CORS(
        app,
        resources={
            r"/api/*": {
                "origins": origins,
                "methods": ["POST", "OPTIONS"],
                "allow_headers": ["Content-Type", "Authorization", "Accept"],
            },
            r"/health": {"origins": origins, "methods": ["GET", "OPTIONS"]},
            r"/": {"origins": origins, "methods": ["GET", "OPTIONS"]},
        },
    )

    limiter = Limiter(
        key_func=get_remote_address,
        storage_uri="memory://",
        default_limits=app.config.get("DEFAULT_RATE_LIMITS", ["1000 per day"]),
    )
    limiter.init_app(app)

    app_logger.debug("Extensions registered")
