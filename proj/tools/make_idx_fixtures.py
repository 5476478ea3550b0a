#!/usr/bin/env python3
"""Writes the IDX test fixtures under tests/fixtures/idx.

valid-*: two 2x3 images with labels 0 and 1.
Each corrupted fixture is an images/labels pair where exactly one file is
broken; the loader must reject all of them.
"""
import pathlib
import struct

out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "idx"
out.mkdir(parents=True, exist_ok=True)

pixels = bytes([0, 51, 102, 153, 204, 255, 255, 204, 153, 102, 51, 0])


def images(count=2, rows=2, cols=3, payload=pixels, magic=0x803):
    return struct.pack(">IIII", magic, count, rows, cols) + payload


def labels(count=2, payload=bytes([0, 1]), magic=0x801):
    return struct.pack(">II", magic, count) + payload


fixtures = {
    "valid": (images(), labels()),
    "bad_magic": (images(magic=0x0804), labels()),
    "truncated": (images()[:-5], labels()),
    "dim_overflow": (images(rows=0x10000, cols=0x10000), labels()),
    "count_mismatch": (images(), labels(count=3, payload=bytes([0, 1, 1]))),
    "zero_count": (images(), labels(count=0, payload=b"")),
    "trailing_garbage": (images(payload=pixels + b"\x00\x7f"), labels()),
}

for name, (img, lab) in fixtures.items():
    (out / f"{name}-images.idx").write_bytes(img)
    (out / f"{name}-labels.idx").write_bytes(lab)
