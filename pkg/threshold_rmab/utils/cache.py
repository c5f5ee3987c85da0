#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
In-memory LRU cache for computed Whittle indices
"""

import logging
from collections import OrderedDict
from functools import wraps
from typing import Any, Callable, Dict, Hashable, Optional

from threshold_rmab.config import INDEX_CACHE_SIZE

logger = logging.getLogger(__name__)


class LRUCache:
    """Bounded mapping that evicts the least recently used entry"""

    def __init__(self, max_size: int = INDEX_CACHE_SIZE):
        if max_size < 1:
            raise ValueError(f"max_size must be positive, got {max_size}")
        self.cache: "OrderedDict[Hashable, Any]" = OrderedDict()
        self.max_size = max_size
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self.cache)

    def __contains__(self, key: Hashable) -> bool:
        return key in self.cache

    def get(self, key: Hashable, default: Optional[Any] = None) -> Any:
        """Get an item and mark it recently used"""
        if key not in self.cache:
            self.misses += 1
            return default

        self.hits += 1
        self.cache.move_to_end(key)
        return self.cache[key]

    def set(self, key: Hashable, value: Any) -> None:
        """Add or refresh an item, evicting the oldest when full"""
        if key in self.cache:
            del self.cache[key]

        if len(self.cache) >= self.max_size:
            self.cache.popitem(last=False)

        self.cache[key] = value

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        """Return the cached value or compute, store and return it"""
        sentinel = _MISSING
        value = self.get(key, sentinel)
        if value is sentinel:
            value = compute()
            self.set(key, value)
        return value

    def clear(self) -> None:
        """Clear the entire cache and its counters"""
        self.cache.clear()
        self.hits = 0
        self.misses = 0

    def hit_rate(self) -> float:
        total = self.hits + self.misses
        if total == 0:
            return 0.0
        return self.hits / total

    def stats(self) -> Dict[str, Any]:
        """Get cache statistics"""
        return {
            "size": len(self.cache),
            "max_size": self.max_size,
            "hits": self.hits,
            "misses": self.misses,
            "hit_rate": self.hit_rate(),
        }


_MISSING = object()


def cached(cache: LRUCache, key_func: Callable[..., Hashable]):
    """
    Decorator memoizing a function in the given cache

    Args:
        cache: Target cache
        key_func: Builds the cache key from the call arguments
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            key = key_func(*args, **kwargs)
            return cache.get_or_compute(key, lambda: func(*args, **kwargs))
        return wrapper
    return decorator
