"""Initialize generators package."""
