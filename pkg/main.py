"""
Entry point: ``python main.py <generate|torsion|check|sweep> ...``
"""
import logging
import sys

from src.config.settings import LOG_FILE, LOG_LEVEL

handlers = [logging.StreamHandler(sys.stderr)]
if LOG_FILE:
    handlers.append(logging.FileHandler(LOG_FILE))

logging.basicConfig(
    level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=handlers,
)

from src.cli.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
