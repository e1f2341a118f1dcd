"""Recursive LLM research workflow with report quality and similarity metrics."""

from .workflow import ResearchOutcome, ResearchParams, recursion_plan, run_deep_research

__version__ = "0.1.0"

__all__ = ["ResearchOutcome", "ResearchParams", "recursion_plan", "run_deep_research", "__version__"]
