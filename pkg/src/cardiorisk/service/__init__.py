"""HTTP service exposing the scoring pipeline."""
