"""Modelling, checking, simulation and rendering services behind the CLI and the API."""
