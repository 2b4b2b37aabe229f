#!/usr/bin/env python3
"""Builds the bundled 10-class digit fixture (IDX containers) from the 5000-sample
MNIST subset shipped with mlxtend (mlxtend/data/data/mnist_5k.csv.gz).

The CSV is sorted by label; each class contributes its first 400 rows to the
train split and its last 100 rows to the test split. Rows are interleaved
round-robin by class so that any prefix of a split is class-balanced.

usage: make_digit_idx.py <mnist_5k.csv.gz | mlxtend wheel> <out_dir>
"""
import gzip
import struct
import sys
import zipfile
from pathlib import Path

CSV_IN_WHEEL = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(src: Path):
    if src.suffix == ".whl":
        blob = zipfile.ZipFile(src).read(CSV_IN_WHEEL)
    else:
        blob = src.read_bytes()
    rows = []
    for line in gzip.decompress(blob).decode().strip().split("\n"):
        vals = [int(float(v)) for v in line.split(",")]
        rows.append((vals[:-1], vals[-1]))
    return rows


def interleave(per_class):
    out = []
    for i in range(max(len(v) for v in per_class)):
        for rows in per_class:
            if i < len(rows):
                out.append(rows[i])
    return out


def write_idx(out_dir: Path, stem: str, rows):
    n = len(rows)
    with open(out_dir / f"{stem}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        for pix, _ in rows:
            f.write(bytes(pix))
    with open(out_dir / f"{stem}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(bytes(lbl for _, lbl in rows))


def main():
    src, out_dir = Path(sys.argv[1]), Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)
    by_class = [[] for _ in range(10)]
    for pix, lbl in read_rows(src):
        by_class[lbl].append((pix, lbl))
    write_idx(out_dir, "train", interleave([c[:400] for c in by_class]))
    write_idx(out_dir, "test", interleave([c[400:] for c in by_class]))


if __name__ == "__main__":
    main()
