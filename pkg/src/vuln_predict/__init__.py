"""Exploit prediction for disclosed vulnerabilities, with leakage-aware evaluation."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("vuln-predict")
except PackageNotFoundError:
    __version__ = "unknown"
