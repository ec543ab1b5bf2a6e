from .main import launch


__all__ = [
    "launch",
]
