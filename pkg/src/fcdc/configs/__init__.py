"""Packaged reference configs (JSON documents for the CLI)."""
