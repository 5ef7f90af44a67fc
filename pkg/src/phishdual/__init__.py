"""Dual-path phishing detection: email text encoder plus URL n-gram classifiers."""

__version__ = "0.1.0"
