"""Independent reimplementation of the hashing embedder.

Prints fixture values frozen into tests/test_embedder.cpp. Run:
    python3 tests/oracles/embedder_oracle.py
"""
import math

MASK = (1 << 64) - 1


def mix64(z):
    z = (z + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def fnv1a64(data: bytes):
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


def embed(text, dim, seed, buckets):
    tokens = text.lower().split()
    if not tokens:
        return [1.0] + [0.0] * (dim - 1)
    counts = {}
    for t in tokens:
        b = mix64(fnv1a64(t.encode()) ^ seed) % buckets
        counts[b] = counts.get(b, 0) + 1
    key = mix64(seed ^ 0x5CA1AB1E0DDBA11)
    v = [0.0] * dim
    for b in sorted(counts):
        for j in range(dim):
            sign = -1.0 if (mix64((key + b * dim + j) & MASK) >> 63) else 1.0
            v[j] += counts[b] * sign
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def cosine(a, b):
    return sum(x * y for x, y in zip(a, b))


if __name__ == "__main__":
    base = embed("aa bb", 64, 42, 4096)
    near = embed("aa bb cc", 64, 42, 4096)
    far = embed("xx yy zz", 64, 42, 4096)
    print(f"cos(aa bb, aa bb cc) = {cosine(base, near):.17g}")
    print(f"cos(aa bb, xx yy zz) = {cosine(base, far):.17g}")
    print("embed('aa bb')[0:4] =", [f"{x:.17g}" for x in base[:4]])
