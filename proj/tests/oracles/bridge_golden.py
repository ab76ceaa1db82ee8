"""Writes the golden bridge transcript for the scripted server (vocab 8, mode normal).

Replies are computed here from the server's documented formula,
p_i proportional to 1 + ((7 i + 3 sum(ctx) + len(ctx)) mod V).
"""
import json
import sys

V = 8


def dist(ctx):
    w = [1 + ((7 * i + 3 * sum(ctx) + len(ctx)) % V) for i in range(V)]
    total = sum(w)
    return [x / total for x in w]


def main(path):
    contexts = [[], [0], [7], [1, 2, 3], [5, 5, 5, 5], list(range(8)), [3] * 20, [6, 0, 6, 0, 1]]
    rows = [({"t": "meta"}, {"t": "meta", "name": "fake-normal", "vocab_size": V})]
    for c in contexts:
        rows.append(({"t": "dist", "ctx": c}, {"t": "dist", "p": dist(c)}))
    with open(path, "w") as f:
        for req, resp in rows:
            f.write(json.dumps({"request": req, "response": resp}) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
