#!/usr/bin/env python3
"""Rebuild data/mnist/*.idx.gz from the digit JSON bundled in the `mnist` npm package.

The npm package (https://www.npmjs.com/package/mnist, v1.1.0) ships the 10k-image
MNIST test split as one JSON file per digit, with pixels stored as value/255
rounded to three decimals. This script restores integer pixels and writes the
standard IDX image/label files. Images are interleaved round-robin across digits
(digit 0 image 0, digit 1 image 0, ..., digit 0 image 1, ...) so that any prefix
of the file is class-balanced.

Usage:
    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 scripts/mnist_from_npm.py package/src/digits data/mnist
"""

import gzip
import json
import struct
import sys
from pathlib import Path


def main() -> None:
    src = Path(sys.argv[1])
    out = Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)

    per_digit = []
    for d in range(10):
        flat = json.loads((src / f"{d}.json").read_text())["data"]
        assert len(flat) % 784 == 0
        per_digit.append([flat[i : i + 784] for i in range(0, len(flat), 784)])

    images, labels = [], []
    for i in range(max(len(v) for v in per_digit)):
        for d in range(10):
            if i < len(per_digit[d]):
                images.append(bytes(min(255, max(0, round(v * 255))) for v in per_digit[d][i]))
                labels.append(d)

    n = len(images)
    with gzip.GzipFile(out / "images.idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for img in images:
            f.write(img)
    with gzip.GzipFile(out / "labels.idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(bytes(labels))
    print(f"wrote {n} images to {out}")


if __name__ == "__main__":
    main()
