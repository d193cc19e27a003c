"""Command-line front end, configuration and payload models for qgsp."""
