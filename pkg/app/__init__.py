"""
Flask application factory for kinward.
"""

from typing import Optional, Type

from flask import Flask

from adapters.controllers.association_controller import create_association_blueprint
from adapters.controllers.kinship_controller import create_kinship_blueprint
from adapters.loggers.logger_adapter import app_logger
from app.extensions import register_extensions
from app.handlers import (
    register_error_handlers,
    register_request_hooks,
    register_shutdown_handlers,
)
from app.routes import register_routes
from config import Config, get_config
from usecases.registry import build_use_cases


class ApplicationFactory:
    """
    Builds configured Flask applications.

    Each API request gets its own in-memory store, so the blueprints receive
    a factory that wires the use cases to that store rather than shared
    use-case instances.
    """

    @staticmethod
    def create_app(config_class: Optional[Type[Config]] = None) -> Flask:
        """
        Create and configure a Flask application instance.

        Args:
            config_class: Configuration class to use. When omitted it is chosen
                from the KINWARD_ENV environment variable.

        Returns:
            Flask: Configured Flask application instance.
        """
        if config_class is None:
            config_class = get_config()

        flask_app = Flask(__name__)
        flask_app.config.from_object(config_class)

        register_extensions(flask_app)
        ApplicationFactory._register_blueprints(flask_app)
        register_error_handlers(flask_app)
        register_request_hooks(flask_app)
        register_shutdown_handlers(flask_app)
        register_routes(flask_app)

        app_logger.info("kinward API created with %s", config_class.__name__)
        return flask_app

    @staticmethod
    def _register_blueprints(flask_app: Flask) -> None:
        flask_app.register_blueprint(create_kinship_blueprint(build_use_cases))
        flask_app.register_blueprint(create_association_blueprint(build_use_cases))


create_app = ApplicationFactory.create_app
