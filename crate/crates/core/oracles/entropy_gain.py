#!/usr/bin/env python3
"""Reference entropy and information-gain values for the decision-tree tests.

Prints JSON to stdout; the committed copy lives next to this script as
entropy_gain.json.
"""
import json
from fractions import Fraction
from math import log2


def entropy(counts):
    n = sum(counts)
    return -sum(float(Fraction(c, n)) * log2(Fraction(c, n)) for c in counts if c)


def info_gain(parent, branches):
    n = sum(parent)
    return entropy(parent) - sum(sum(b) / n * entropy(b) for b in branches)


def main():
    parent = [9, 5]
    # 14 rows over a three-valued attribute: (positive, negative) per value
    branches = [[2, 3], [4, 0], [3, 2]]
    assert [sum(col) for col in zip(*branches)] == parent
    out = {
        "entropy_9_5": round(entropy(parent), 12),
        "partition": {"parent": parent, "branches": branches},
        "info_gain_3way": round(info_gain(parent, branches), 12),
        "split_info_3way": round(entropy([sum(b) for b in branches]), 12),
    }
    out["gain_ratio_3way"] = round(out["info_gain_3way"] / out["split_info_3way"], 12)
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
