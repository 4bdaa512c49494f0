"""Fixed-capacity FIFO replay buffer backed by preallocated arrays."""
from __future__ import annotations

import numpy as np


class ReplayBuffer:
    """Stores (state, value, action) rows; the oldest row is evicted when full.

    Logical index 0 is the oldest stored row. Random access is O(1), unlike
    ``collections.deque``, which matters for batch sampling at every step.
    """

    def __init__(self, capacity, n_features):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.states = np.zeros((self.capacity, n_features))
        self.values = np.zeros(self.capacity)
        self.actions = np.zeros(self.capacity, dtype=np.int64)
        self._start = 0
        self._size = 0

    def __len__(self):
        return self._size

    def append(self, state, value, action=0):
        if self._size < self.capacity:
            pos = self._size
            self._size += 1
        else:
            pos = self._start
            self._start = (self._start + 1) % self.capacity
        self.states[pos] = state
        self.values[pos] = value
        self.actions[pos] = action

    def _physical(self, idx):
        return (self._start + np.asarray(idx)) % self.capacity

    def gather(self, idx):
        """Rows at logical indices ``idx``: (states, values, actions)."""
        p = self._physical(idx)
        return self.states[p], self.values[p], self.actions[p]

    def sample(self, rng, batch_size):
        """Uniform draw with replacement of min(batch_size, len) rows."""
        idx = rng.integers(0, self._size, size=min(batch_size, self._size))
        return self.gather(idx)

    def ordered(self):
        """All stored rows, oldest first."""
        return self.gather(np.arange(self._size))
