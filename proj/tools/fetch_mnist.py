#!/usr/bin/env python3
# Copyright 2026 The nattr Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds MNIST IDX files from the digit subset bundled in the npm `mnist`
package (about 10k real MNIST digits stored as JSON).

Writes train-images-idx3-ubyte / train-labels-idx1-ubyte (everything except
the held-out digits) and t10k-images-idx3-ubyte / t10k-labels-idx1-ubyte
(the last 100 digits of every class, 1000 total). Both files are interleaved
round-robin over classes so any prefix is class balanced.
"""

import argparse
import json
import pathlib
import struct
import subprocess
import tarfile
import tempfile

PACKAGE = "mnist@1.1.0"
PIXELS = 28 * 28
TEST_PER_CLASS = 100


def interleave(per_class):
    out = []
    longest = max(len(v) for v in per_class)
    for i in range(longest):
        for label, digits in enumerate(per_class):
            if i < len(digits):
                out.append((label, digits[i]))
    return out


def write_idx(directory, prefix, samples):
    images = bytearray(struct.pack(">IIII", 0x00000803, len(samples), 28, 28))
    labels = bytearray(struct.pack(">II", 0x00000801, len(samples)))
    for label, pixels in samples:
        images.extend(pixels)
        labels.append(label)
    (directory / f"{prefix}-images-idx3-ubyte").write_bytes(images)
    (directory / f"{prefix}-labels-idx1-ubyte").write_bytes(labels)


def load_digits(package_dir):
    per_class = []
    for label in range(10):
        path = package_dir / "src" / "digits" / f"{label}.json"
        data = json.loads(path.read_text())["data"]
        if len(data) % PIXELS != 0:
            raise SystemExit(f"{path}: {len(data)} values is not a multiple of {PIXELS}")
        quantized = bytes(min(255, max(0, round(v * 255))) for v in data)
        per_class.append([quantized[i:i + PIXELS] for i in range(0, len(quantized), PIXELS)])
    return per_class


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/mnist", help="output directory")
    parser.add_argument("--package-tgz", help="use an already downloaded npm tarball")
    args = parser.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        if args.package_tgz:
            tgz = pathlib.Path(args.package_tgz)
        else:
            subprocess.run(["npm", "pack", PACKAGE, "--silent"], cwd=tmp, check=True,
                           stdout=subprocess.DEVNULL)
            tgz = next(tmp.glob("mnist-*.tgz"))
        with tarfile.open(tgz) as archive:
            archive.extractall(tmp)
        per_class = load_digits(tmp / "package")

    train = interleave([digits[:-TEST_PER_CLASS] for digits in per_class])
    test = interleave([digits[-TEST_PER_CLASS:] for digits in per_class])
    write_idx(out, "train", train)
    write_idx(out, "t10k", test)
    print(f"wrote {len(train)} training and {len(test)} test images to {out}")


if __name__ == "__main__":
    main()
