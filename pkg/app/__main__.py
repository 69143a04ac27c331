import sys
from typing import Optional, Sequence

from adapters.controllers.cli_controller import CliController
from adapters.storage.text_file_store import TextFileStore
from usecases.registry import build_use_cases


def serve(host: str, port: int) -> None:
    from app import create_app

    app = create_app()
    app.run(host=host, port=port, debug=app.config.get("DEBUG", False))


def main(argv: Optional[Sequence[str]] = None) -> int:
    controller = CliController(build_use_cases(TextFileStore()), serve=serve)
    return controller.run(argv)


if __name__ == "__main__":
    sys.exit(main())
