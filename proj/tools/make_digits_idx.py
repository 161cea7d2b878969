#!/usr/bin/env python3
"""Write small digit-classification sets as gzipped IDX files.

  sklearn  1797 images, 8x8, from sklearn.datasets.load_digits
           (pixel values 0..16 rescaled to 0..255)
  mnist5k  5000 MNIST images, 28x28, bundled with the mlxtend wheel
           (pass the wheel path with --wheel)
"""
import argparse
import gzip
import io
import pathlib
import struct
import zipfile

import numpy as np


def sklearn_digits():
    from sklearn.datasets import load_digits

    d = load_digits()
    images = np.rint(d.images * (255.0 / 16.0)).astype(np.uint8)
    return images, d.target.astype(np.uint8)


def mnist5k(wheel):
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("mlxtend/data/data/mnist_5k.csv.gz")
    a = np.loadtxt(io.TextIOWrapper(gzip.open(io.BytesIO(raw))), delimiter=",")
    images = a[:, :-1].astype(np.uint8).reshape(-1, 28, 28)
    return images, a[:, -1].astype(np.uint8)


def write_idx(out_dir, prefix, images, labels):
    n, rows, cols = images.shape
    # mtime=0 keeps the output byte-stable
    with gzip.GzipFile(out_dir / f"{prefix}-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, rows, cols))
        f.write(images.tobytes())
    with gzip.GzipFile(out_dir / f"{prefix}-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--source", choices=["sklearn", "mnist5k"], default="sklearn")
    ap.add_argument("--wheel", type=pathlib.Path, help="mlxtend wheel (mnist5k only)")
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    if args.source == "sklearn":
        write_idx(args.out_dir, "digits", *sklearn_digits())
    else:
        if args.wheel is None:
            ap.error("--wheel is required for mnist5k")
        write_idx(args.out_dir, "mnist5k", *mnist5k(args.wheel))


if __name__ == "__main__":
    main()
