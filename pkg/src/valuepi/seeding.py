"""Named random sub-streams derived from one root seed."""
from __future__ import annotations

import numpy as np


def substream(root, name):
    """Independent generator for ``name``; unrelated names never share draws."""
    return np.random.default_rng([int(root), *name.encode("utf-8")])


class Seeds:
    def __init__(self, root):
        self.root = int(root)

    def __call__(self, name):
        return substream(self.root, name)

    def child(self, name):
        """Derived root seed for a nested run (e.g. one sweep setting)."""
        return Seeds(int(substream(self.root, name).integers(0, 2**31 - 1)))
