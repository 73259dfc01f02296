"""Coverage-aware iterative crawling for supplier discovery with knowledge-graph feedback."""

__version__ = "0.1.0"
