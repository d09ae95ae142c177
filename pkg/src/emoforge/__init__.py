"""Keyword-guided synthetic augmentation for tweet emotion classification.

Modules: ``corpus`` (data, preprocessing, splits), ``tfidf``, ``gbdt``
(softmax boosted trees), ``shap`` (exact TreeSHAP), ``keywords``,
``genclient`` (prompting and LLM backends), ``linguistics`` (diversity
metrics), ``harness`` (incremental experiments) and ``cli``.
"""

__version__ = "0.1.0"
