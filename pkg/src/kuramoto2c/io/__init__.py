"""Configuration, CSV output and the command-line interface."""
