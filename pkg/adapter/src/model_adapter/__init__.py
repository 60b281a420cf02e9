"""Serve a classifier checkpoint behind the hard-label classification protocol."""

from .config import AdapterConfig
from .service import create_app, serve

__version__ = "0.1.0"
