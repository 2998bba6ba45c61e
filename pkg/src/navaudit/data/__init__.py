"""Bundled data files: public suffix snapshot and English word list."""
