"""Command-line runner for slising."""
