"""
Middleware пакет
"""
from app.middlewares.logging import LoggingMiddleware

__all__ = [
    "LoggingMiddleware"
]
