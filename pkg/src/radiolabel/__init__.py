"""Label-driven broadcasting, gathering and gossiping in synchronous radio networks."""

__version__ = "0.1.0"
