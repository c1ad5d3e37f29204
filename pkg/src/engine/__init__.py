"""Initialize engine package."""
