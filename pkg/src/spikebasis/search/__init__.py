"""Basis search over O(n), oracles and theorem verification."""

from .orthogonal import SearchConfig, SearchResult, search_orthogonal

__all__ = ["SearchConfig", "SearchResult", "search_orthogonal"]
