"""Experiment pipelines: symbol series, cellular automata, and images."""
