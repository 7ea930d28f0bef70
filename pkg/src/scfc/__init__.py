"""Statistical confidence in functional correctness for AI evaluation results.

Per-sample evaluation results (or an aggregate confusion matrix) plus
specification limits go in; bootstrap confidence intervals, capability
indices and a deployment verdict come out.
"""

__version__ = "0.1.0"
