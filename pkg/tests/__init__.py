"""Empty module for python import traversal."""
