"""mlm-server: a thin HTTP service around a pretrained masked language
model, serving per-position conditional log-probabilities."""

__version__ = "0.1.0"

from .server import ServedModel, create_app

__all__ = ["__version__", "ServedModel", "create_app"]
