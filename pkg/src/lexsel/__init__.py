"""Toolkit for mining cross-lingual lexical variation and evaluating
lexical selection.

Pipeline: align a parallel corpus (or ingest existing alignments), mine
concepts whose translation varies with context, sample a selection test
set, validate it with human annotators, generate usage rules with a chat
model, and score models on the validated set.
"""

__version__ = "0.1.0"

from lexsel._kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
