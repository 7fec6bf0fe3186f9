#!/usr/bin/env python3
"""Convert the LINQS Cora distribution into the vigraph dataset layout.

The LINQS files (cora.content / cora.cites) ship inside the PGL wheel on
PyPI, which is the only place this tool looks when no explicit paths are
given:

    pip download --no-deps pgl==2.2.6 -d /tmp/pgl
    python3 scripts/ingest_cora.py --wheel /tmp/pgl/pgl-2.2.6-*.whl --out data/cora

The split follows the Planetoid recipe (20 labeled nodes per class, 500
validation nodes, 1000 test nodes) drawn from one seeded permutation, since
the Planetoid node order itself is not part of the LINQS release.
"""

import argparse
import io
import json
import zipfile
from pathlib import Path

import numpy as np


def read_sources(args):
    if args.wheel:
        with zipfile.ZipFile(args.wheel) as wheel:
            content = wheel.read("pgl/data/cora/cora.content").decode()
            cites = wheel.read("pgl/data/cora/cora.cites").decode()
        return content, cites
    return Path(args.content).read_text(), Path(args.cites).read_text()


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--wheel", help="path to the pgl wheel")
    parser.add_argument("--content", help="path to cora.content")
    parser.add_argument("--cites", help="path to cora.cites")
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--train-per-class", type=int, default=20)
    parser.add_argument("--val", type=int, default=500)
    parser.add_argument("--test", type=int, default=1000)
    args = parser.parse_args()
    if not args.wheel and not (args.content and args.cites):
        parser.error("either --wheel or both --content and --cites are required")

    content, cites = read_sources(args)

    paper_ids, rows, class_names = [], [], []
    for line in content.splitlines():
        parts = line.split()
        if not parts:
            continue
        paper_ids.append(parts[0])
        rows.append([int(v) for v in parts[1:-1]])
        class_names.append(parts[-1])
    index = {pid: i for i, pid in enumerate(paper_ids)}
    classes = sorted(set(class_names))
    labels = np.array([classes.index(c) for c in class_names])
    features = np.array(rows, dtype=np.int64)

    edges = set()
    for line in cites.splitlines():
        parts = line.split()
        if len(parts) != 2:
            continue
        u, v = index[parts[0]], index[parts[1]]
        if u != v:
            edges.add((min(u, v), max(u, v)))

    rng = np.random.RandomState(args.seed)
    order = rng.permutation(len(paper_ids))
    taken = {c: 0 for c in range(len(classes))}
    train, rest = [], []
    for node in order:
        c = labels[node]
        if taken[c] < args.train_per_class:
            taken[c] += 1
            train.append(int(node))
        else:
            rest.append(int(node))
    val = rest[: args.val]
    test = rest[args.val : args.val + args.test]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.tsv", "w") as f:
        for u, v in sorted(edges):
            f.write(f"{u}\t{v}\n")
    with open(out / "features.tsv", "w") as f:
        buf = io.StringIO()
        for i, row in enumerate(features):
            buf.write(str(i))
            buf.write("\t")
            buf.write("\t".join(map(str, row)))
            buf.write("\n")
        f.write(buf.getvalue())
    with open(out / "labels.tsv", "w") as f:
        for i, c in enumerate(labels):
            f.write(f"{i}\t{c}\n")
    with open(out / "split.json", "w") as f:
        json.dump({"train": sorted(train), "val": sorted(val), "test": sorted(test)}, f)
        f.write("\n")
    with open(out / "meta.json", "w") as f:
        json.dump(
            {
                "name": "cora",
                "source": "LINQS cora.content / cora.cites (bundled in pgl 2.2.6)",
                "classes": classes,
                "node_count": len(paper_ids),
                "edge_count": len(edges),
                "feature_count": int(features.shape[1]),
                "split": {
                    "recipe": "planetoid-style: per-class train quota, then val, then test from one permutation",
                    "seed": args.seed,
                    "train_per_class": args.train_per_class,
                    "val": args.val,
                    "test": args.test,
                },
            },
            f,
            indent=2,
        )
        f.write("\n")
    print(f"wrote {out}: N={len(paper_ids)} E={len(edges)} F={features.shape[1]} k={len(classes)}")


if __name__ == "__main__":
    main()
