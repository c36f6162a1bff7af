#!/usr/bin/env python3
"""Writes the 10-token micro-fixture used by the test suites.

Files are produced with an independent NPPT writer (struct + json), and the
script prints a brute-force table of class scores and predictions for
k in {1, 2, 4} so the values frozen into the tests can be re-derived.

    python3 tools/make_micro_fixture.py tests/data/micro
"""
import json
import pathlib
import struct
import sys

import numpy as np

TOKENS = ["<pad>", "<mask>", " sports", " game", " business", " money",
          " river", " lake", " mountain", " market"]
SPECIAL = [True, True] + [False] * 8

EMBEDDINGS = np.array([
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.8, 0.1, 0.0, 0.5],
    [0.0, 1.0, 0.0, 0.0],
    [0.1, 0.8, 0.0, 0.5],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.2, 0.9, 0.1],
    [0.3, 0.0, 0.7, 0.6],
    [0.35, 0.6, 0.0, 0.6],
], dtype=np.float32)

CLASSES = [("sports", ["sports"]), ("business", ["business"]),
           ("nature", ["river", "lake", "mountain"])]

TEMPLATE = "{text} This topic is about {mask} ."

# (id, text, gold, {token: logit})
EXAMPLES = [
    ("ex1", "The Warriors won the NBA championship 2022", 0, {"sports": 5, "game": 4}),
    ("ex2", "Stocks rallied as profits beat forecasts", 1, {"business": 4, "money": 3}),
    ("ex3", "The river flooded the valley", 2, {"river": 3, "lake": 3, "mountain": 2}),
    ("ex4", "Climbers reached the summit at dawn", 2, {"mountain": 4, "game": 2, "<mask>": 9}),
    ("ex5", "Traders crowded the market floor", 1,
     {"business": 1, "money": 1, "game": 2.5, "market": 6}),
    ("ex6", "A late goal decided the game", 0, {"sports": 1, "game": 5, "business": 2}),
]


def token_id(name):
    for i, t in enumerate(TOKENS):
        if t.strip() == name:
            return i
    raise KeyError(name)


def logits_matrix():
    m = np.zeros((len(EXAMPLES), len(TOKENS)), dtype=np.float32)
    for r, (_, _, _, values) in enumerate(EXAMPLES):
        for name, v in values.items():
            m[r, token_id(name)] = v
    return m


def write_npt(path, array):
    header = json.dumps({"dtype": "f32", "shape": list(array.shape)},
                        separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(b"NPPT")
        f.write(struct.pack("<II", 1, len(header)))
        f.write(header)
        f.write(array.astype("<f4").tobytes())


def oracle(k, mode="sum_logit"):
    emb = EMBEDDINGS.astype(np.float64)
    logits = logits_matrix().astype(np.float64)

    def neighbors(kw):
        u = emb[token_id(kw)]
        scored = []
        for i in range(len(TOKENS)):
            if SPECIAL[i]:
                continue
            v = emb[i]
            scored.append((-(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v)), i))
        scored.sort()
        return [(i, -s) for s, i in scored[:k]]

    rows = []
    for r in range(len(EXAMPLES)):
        theta = logits[r]
        if mode == "sum_prob":
            e = np.exp(theta - theta.max())
            theta = e / e.sum()
        scores = []
        for _, keywords in CLASSES:
            best = None
            for kw in keywords:
                nb = neighbors(kw)
                s = np.array([x[1] for x in nb])
                w = np.exp(s - s.max())
                w /= w.sum()
                val = sum(wi * theta[i] for wi, (i, _) in zip(w, nb))
                if best is None or val > best:
                    best = val
            scores.append(best)
        rows.append((scores, int(np.argmax(scores))))
    return rows


def main(out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "vocab.vocab.jsonl", "w") as f:
        for i, (t, s) in enumerate(zip(TOKENS, SPECIAL)):
            f.write(json.dumps({"id": i, "token": t, "special": s}) + "\n")
    write_npt(out / "embeddings.npt", EMBEDDINGS)
    write_npt(out / "logits.npt", logits_matrix())
    with open(out / "logits.manifest.jsonl", "w") as f:
        for r, (ex_id, _, _, _) in enumerate(EXAMPLES):
            f.write(json.dumps({"row": r, "id": ex_id}) + "\n")
    with open(out / "dataset.jsonl", "w") as f:
        for ex_id, text, gold, _ in EXAMPLES:
            f.write(json.dumps({"id": ex_id, "text": text, "label": gold}) + "\n")
    config = {
        "vocab": "vocab.vocab.jsonl",
        "embeddings": "embeddings.npt",
        "dataset": "dataset.jsonl",
        "logits": "logits.npt",
        "manifest": "logits.manifest.jsonl",
        "template": TEMPLATE,
        "classes": [{"name": n, "keywords": kws} for n, kws in CLASSES],
        "k": 4,
        "metric": "cosine",
        "weights": "softmax",
        "mode": "sum_logit",
        "eval_metric": "accuracy",
        "parallel": 2,
    }
    with open(out / "config.json", "w") as f:
        json.dump(config, f, indent=2)
        f.write("\n")

    golds = [g for _, _, g, _ in EXAMPLES]
    for mode in ("sum_logit", "sum_prob"):
        for k in (1, 2, 4):
            rows = oracle(k, mode)
            preds = [p for _, p in rows]
            acc = sum(p == g for p, g in zip(preds, golds)) / len(golds)
            print(f"{mode} k={k} preds={preds} acc={acc}")
            for scores, _ in rows:
                print("   ", ", ".join(repr(float(s)) for s in scores))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/micro")
