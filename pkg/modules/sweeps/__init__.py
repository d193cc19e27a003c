"""Celery tasks and the local worker pool for parameter sweeps."""
