"""Initialize src package."""
