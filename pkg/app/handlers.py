import atexit
import time

from flask import Flask, g, jsonify, request
from werkzeug.exceptions import HTTPException

from adapters.loggers.logger_adapter import app_logger
from app.api_response import ApiResponse
from core.domain.exceptions import KinwardException, KinwardValidationError

ELAPSED_HEADER = "X-Kinward-Elapsed"


def _error(message: str, code: str, status: int):
    return jsonify(ApiResponse.error(message, error_code=code)), status


def register_error_handlers(app: Flask) -> None:
    @app.errorhandler(KinwardValidationError)
    def handle_validation_error(error):
        app_logger.warning("Rejected %s: %s", request.path, error)
        return _error(str(error), "VALIDATION_ERROR", 400)

    @app.errorhandler(KinwardException)
    def handle_domain_error(error):
        app_logger.error("Analysis on %s failed: %s", request.path, error)
        return _error(str(error), "ANALYSIS_FAILED", 422)

    @app.errorhandler(404)
    def handle_not_found(_exc):
        return _error("Resource not found", "NOT_FOUND", 404)

    @app.errorhandler(413)
    def handle_payload_too_large(_exc):
        limit = app.config.get("MAX_CONTENT_LENGTH")
        app_logger.warning("Payload on %s exceeds %s bytes", request.path, limit)
        return _error(
            f"Request body exceeds {limit} bytes; use the command line for large panels",
            "PAYLOAD_TOO_LARGE",
            413,
        )

    @app.errorhandler(429)
    def handle_rate_limit_exceeded(error):
        app_logger.warning("Rate limit exceeded for %s: %s", request.remote_addr, error)
        return _error("Too many requests", "RATE_LIMITED", 429)

    @app.errorhandler(HTTPException)
    def handle_http_exception(error):
        return _error(error.description, error.name.upper().replace(" ", "_"), error.code)

    @app.errorhandler(Exception)
    def handle_exception(error):
        app_logger.error("Unhandled exception on %s: %s", request.path, error, exc_info=True)
        return _error("An unexpected error occurred", "INTERNAL_ERROR", 500)


def register_request_hooks(app: Flask) -> None:
    @app.before_request
    def start_timer():
        g.started = time.perf_counter()

    @app.after_request
    def record_elapsed(response):
        started = g.pop("started", None)
        if started is not None:
            elapsed = time.perf_counter() - started
            response.headers[ELAPSED_HEADER] = f"{elapsed:.4f}"
            app_logger.info(
                "%s %s -> %s in %.4fs", request.method, request.path, response.status_code, elapsed
            )
        return response


def register_shutdown_handlers(_app: Flask) -> None:
    atexit.register(app_logger.info, "kinward API is shutting down")
