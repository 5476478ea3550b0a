#!/usr/bin/env python3
"""Convert the 10k-digit sample shipped in the `mnist` npm package to IDX files.

Usage:
    npm install mnist          # in any scratch directory
    python3 tools/mnist_from_npm.py node_modules/mnist/src/digits data/

Writes mnist10k-images-idx3-ubyte and mnist10k-labels-idx1-ubyte. The package
stores pixels as byte/255 rounded to three decimals, so round(v * 255)
recovers the original bytes exactly.
"""
import json
import struct
import sys
from pathlib import Path

ROWS = COLS = 28


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    digits_dir, out_dir = Path(sys.argv[1]), Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)

    per_class = []
    for digit in range(10):
        data = json.loads((digits_dir / f"{digit}.json").read_text())["data"]
        n = len(data) // (ROWS * COLS)
        per_class.append([bytes(round(v * 255) for v in data[i * 784:(i + 1) * 784]) for i in range(n)])

    # Round-robin over classes so any prefix is roughly balanced.
    images, labels = [], []
    cursor = [0] * 10
    while any(cursor[d] < len(per_class[d]) for d in range(10)):
        for d in range(10):
            if cursor[d] < len(per_class[d]):
                images.append(per_class[d][cursor[d]])
                labels.append(d)
                cursor[d] += 1

    with open(out_dir / "mnist10k-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), ROWS, COLS))
        for img in images:
            f.write(img)
    with open(out_dir / "mnist10k-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))
    print(f"wrote {len(images)} images to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
