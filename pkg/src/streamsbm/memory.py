"""Semantic memory accounting.

Charges are in bits of information actually needed (index and label widths),
with a parallel tally of machine bytes for the numpy arrays involved.
"""
from contextlib import contextmanager
import math


def index_bits(n):
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def label_bits(K):
    return math.ceil(math.log2(K)) if K > 1 else 0


FLOAT_BITS = 64


class MemoryMeter:
    def __init__(self):
        self._held = {}
        self._bytes = {}
        self.current = 0
        self.peak = 0
        self.current_bytes = 0
        self.peak_bytes = 0

    def charge(self, key, bits, nbytes=0):
        """Set the holding for ``key`` to ``bits`` (replacing any previous one)."""
        self.release(key)
        bits = int(bits)
        self._held[key] = bits
        self._bytes[key] = int(nbytes)
        self.current += bits
        self.current_bytes += int(nbytes)
        self.peak = max(self.peak, self.current)
        self.peak_bytes = max(self.peak_bytes, self.current_bytes)

    def release(self, key):
        self.current -= self._held.pop(key, 0)
        self.current_bytes -= self._bytes.pop(key, 0)

    def held(self, key):
        return self._held.get(key, 0)

    def keys(self):
        return list(self._held)

    @contextmanager
    def scope(self, prefix):
        """Release every key starting with ``prefix`` on exit."""
        try:
            yield self
        finally:
            for k in [k for k in self._held if isinstance(k, tuple) and k[0] == prefix]:
                self.release(k)


class NullMeter(MemoryMeter):
    def charge(self, key, bits, nbytes=0):
        pass
