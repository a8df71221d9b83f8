"""Coherence classification toolkit for a four-level thermal engine.

Physics layer: build the counting-field-dressed generator, solve for
steady states, and turn exchange statistics into features. Learning
layer: a from-scratch KNN classifier with cross-validation, tuning,
metrics, and the constrained-scenario application study, all behind a
deterministic seeded pipeline.
"""

__version__ = "0.1.0"
