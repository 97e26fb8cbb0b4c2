"""Command-line surface: argument parsing and command wiring only."""
