"""Screening CRISPR-Cas13 guide RNAs with a small numpy CNN.

Modules: ``seqcore`` (sequences, encoding), ``dataset`` (ingestion, octile
labels, folds, planted data), ``nn`` (network, Adam, model files),
``evaluation`` (metrics, ROC, cross-validation, latency), ``analysis``
(mismatch statistics) and ``cli``.
"""

__version__ = "0.1.0"
