"""Event-centric temporal knowledge graph construction from multilingual sources."""

__version__ = "0.1.0"
