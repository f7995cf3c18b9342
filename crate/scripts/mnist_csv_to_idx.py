#!/usr/bin/env python3
"""Convert a label-last MNIST CSV (e.g. mlxtend's mnist_5k.csv.gz) to gzipped IDX files.

usage: mnist_csv_to_idx.py <input.csv[.gz]> <output-dir>
"""
import gzip
import struct
import sys
from pathlib import Path


def main() -> None:
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    opener = gzip.open if src.suffix == ".gz" else open
    images, labels = bytearray(), bytearray()
    with opener(src, "rt") as fh:
        for line in fh:
            fields = [int(float(v)) for v in line.strip().split(",")]
            if len(fields) != 785:
                continue
            images.extend(bytes(fields[:784]))
            labels.append(fields[784])
    n = len(labels)
    out.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(out / "train-images-idx3-ubyte.gz", "wb", mtime=0) as fh:
        fh.write(struct.pack(">IIII", 0x803, n, 28, 28) + bytes(images))
    with gzip.GzipFile(out / "train-labels-idx1-ubyte.gz", "wb", mtime=0) as fh:
        fh.write(struct.pack(">II", 0x801, n) + bytes(labels))
    print(f"wrote {n} images to {out}")


if __name__ == "__main__":
    main()
