import time

from flask import Flask, jsonify

from core.domain.assoc_model import Method
from core.domain.kinship_model import KinshipMethod


def register_routes(app: Flask) -> None:
    @app.route("/")
    def index():
        return jsonify(
            {
                "status": "ok",
                "service": "kinward",
                "version": app.config.get("VERSION", "0.1.0"),
                "endpoints": {
                    "kinship": "/api/kinship",
                    "assoc": "/api/assoc",
                    "gc": "/api/gc",
                    "health": "/health",
                },
                "kinship_methods": [m.value for m in KinshipMethod],
                "assoc_methods": [m.value for m in Method if m is not Method.GC],
                "max_cells": app.config.get("API_MAX_CELLS"),
            }
        )

    @app.route("/health")
    def health():
        return jsonify({"status": "healthy", "timestamp": time.time()})
