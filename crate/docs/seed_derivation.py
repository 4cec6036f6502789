#!/usr/bin/env python3
"""Reproduce per-trajectory seeds: seed_derivation.py <master_seed> <index>."""
import sys

M, GOLDEN = (1 << 64) - 1, 0x9E3779B97F4A7C15


def splitmix64(state):
    state = (state + GOLDEN) & M
    z = ((state ^ (state >> 30)) * 0xBF58476D1CE4E5B9) & M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
    return state, z ^ (z >> 31)


def derive_seed(master, index):
    state, out = master ^ (((index + 1) * GOLDEN) & M), b""
    for _ in range(4):
        state, word = splitmix64(state)
        out += word.to_bytes(8, "little")
    return out


if __name__ == "__main__":
    print(derive_seed(int(sys.argv[1]), int(sys.argv[2])).hex())
