"""Readers and writers for images, keypoints, descriptors and matches."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .descriptor import N_BITS
from .detect import Keypoint
from .image import GrayImage, Image, RgbImage, SkinMask
from .matcher import Match

PathLike = Union[str, Path]

DESCRIPTOR_MAGIC = "FEATDESC"


class FormatError(ValueError):
    """Raised for malformed or unsupported file contents."""


# -- PGM / PPM -------------------------------------------------------------------


def _netpbm_header(data: bytes) -> tuple[bytes, list[int], int]:
    """Parse magic, width, height, maxval; return them and the raster offset."""
    pos = 0
    tokens: list[bytes] = []
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM/PPM header")
        tokens.append(data[start:pos])
    # Exactly one whitespace byte separates maxval from the raster.
    if pos >= n or not data[pos : pos + 1].isspace():
        raise FormatError("missing whitespace after maxval")
    try:
        values = [int(t) for t in tokens[1:]]
    except ValueError as exc:
        raise FormatError(f"bad header value: {exc}") from None
    return tokens[0], values, pos + 1


def decode_netpbm(data: bytes) -> Image:
    magic, (width, height, maxval), offset = _netpbm_header(data)
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise FormatError(f"unsupported magic {magic!r}; only binary P5/P6 are read")
    if width <= 0 or height <= 0:
        raise FormatError(f"invalid dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise FormatError(f"only 8-bit rasters are supported (maxval={maxval})")
    size = width * height * channels
    raster = data[offset : offset + size]
    if len(raster) != size:
        raise FormatError(f"raster holds {len(raster)} bytes, expected {size}")
    px = np.frombuffer(raster, dtype=np.uint8)
    if maxval != 255:
        px = (px.astype(np.uint32) * 255 + maxval // 2) // maxval
    if channels == 1:
        return GrayImage(px.reshape(height, width))
    return RgbImage(px.reshape(height, width, 3))


def encode_netpbm(img: Image) -> bytes:
    magic = b"P5" if isinstance(img, GrayImage) else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + img.pixels.tobytes()


def read_image(path: PathLike) -> Image:
    """Read PGM/PPM natively; other formats (PNG, JPEG) need Pillow."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in (b"P5", b"P6"):
        return decode_netpbm(data)
    try:
        from PIL import Image as PILImage
    except ImportError:  # pragma: no cover - depends on environment
        raise FormatError(f"{path}: not a PGM/PPM file and Pillow is not installed") from None
    with PILImage.open(io.BytesIO(data)) as im:
        if im.mode in ("L", "1", "I;16", "I"):
            return GrayImage(np.asarray(im.convert("L")))
        return RgbImage(np.asarray(im.convert("RGB")))


def write_image(path: PathLike, img: Image) -> None:
    """Write by extension: ``.pgm``/``.ppm``/``.pnm`` natively, ``.png`` via Pillow."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".ppm", ".pnm"):
        if suffix == ".pgm" and isinstance(img, RgbImage):
            raise FormatError("cannot store a color image as PGM")
        if suffix == ".ppm" and isinstance(img, GrayImage):
            from .image import as_rgb

            img = as_rgb(img)
        path.write_bytes(encode_netpbm(img))
        return
    if suffix == ".png":
        try:
            from PIL import Image as PILImage
        except ImportError:  # pragma: no cover
            raise FormatError("PNG output needs Pillow") from None
        buf = io.BytesIO()
        PILImage.fromarray(img.pixels).save(buf, format="PNG")
        path.write_bytes(buf.getvalue())
        return
    raise FormatError(f"unsupported image extension {suffix!r}")


def write_mask(path: PathLike, mask: SkinMask) -> None:
    write_image(path, GrayImage(mask.bits.astype(np.uint8) * 255))


def read_mask(path: PathLike) -> SkinMask:
    img = read_image(path)
    if not isinstance(img, GrayImage):
        raise FormatError("mask files are grayscale")
    return SkinMask(img.pixels >= 128)


# -- keypoints -------------------------------------------------------------------

KEYPOINT_FIELDS = ("x", "y", "response", "angle")


def _f6(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def keypoints_to_csv(kps: Sequence[Keypoint]) -> str:
    lines = [",".join(KEYPOINT_FIELDS)]
    lines += [",".join(_f6(getattr(k, f)) for f in KEYPOINT_FIELDS) for k in kps]
    return "\n".join(lines) + "\n"


def keypoints_from_csv(text: str) -> list[Keypoint]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != KEYPOINT_FIELDS:
        raise FormatError(f"keypoint CSV header must be {','.join(KEYPOINT_FIELDS)}")
    return [Keypoint(*(float(row[f]) for f in KEYPOINT_FIELDS)) for row in reader]


def keypoints_to_json(kps: Sequence[Keypoint]) -> str:
    # Emit fixed 6-decimal literals rather than repr floats.
    items = [
        "{" + ", ".join(f'"{f}": {_f6(getattr(k, f))}' for f in KEYPOINT_FIELDS) + "}"
        for k in kps
    ]
    if not items:
        return "[]\n"
    return "[\n  " + ",\n  ".join(items) + "\n]\n"


def keypoints_from_json(text: str) -> list[Keypoint]:
    data = json.loads(text)
    if not isinstance(data, list):
        raise FormatError("keypoint JSON must be an array")
    return [Keypoint(*(float(d[f]) for f in KEYPOINT_FIELDS)) for d in data]


# -- descriptors -----------------------------------------------------------------


def descriptors_to_text(desc: np.ndarray, seed: int) -> str:
    desc = np.asarray(desc, dtype=np.uint8).reshape(-1, N_BITS // 8)
    lines = [f"{DESCRIPTOR_MAGIC} v1 bits={N_BITS} seed={seed}"]
    lines += [row.tobytes().hex() for row in desc]
    return "\n".join(lines) + "\n"


def descriptors_from_text(text: str) -> tuple[np.ndarray, int]:
    """Parse a descriptor file; returns ``(descriptors, seed)``."""
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty descriptor file")
    parts = lines[0].split()
    if len(parts) != 4 or parts[0] != DESCRIPTOR_MAGIC or parts[1] != "v1":
        raise FormatError(f"bad descriptor header {lines[0]!r}")
    fields = dict(p.split("=", 1) for p in parts[2:])
    bits = int(fields["bits"])
    if bits != N_BITS:
        raise FormatError(f"unsupported descriptor length {bits}")
    rows = [bytes.fromhex(line) for line in lines[1:] if line]
    if any(len(r) != bits // 8 for r in rows):
        raise FormatError("descriptor row of wrong length")
    desc = np.frombuffer(b"".join(rows), dtype=np.uint8).reshape(len(rows), bits // 8)
    return desc.copy(), int(fields["seed"])


# -- matches ---------------------------------------------------------------------

MATCH_FIELDS = ("query_idx", "train_idx", "distance_bits", "distance_norm")


def matches_to_csv(matches: Sequence[Match]) -> str:
    lines = [",".join(MATCH_FIELDS)]
    lines += [
        f"{m.query_idx},{m.train_idx},{m.distance_bits},{m.distance_norm:.6f}" for m in matches
    ]
    return "\n".join(lines) + "\n"


def matches_from_csv(text: str) -> list[Match]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != MATCH_FIELDS:
        raise FormatError(f"match CSV header must be {','.join(MATCH_FIELDS)}")
    return [
        Match(int(row["query_idx"]), int(row["train_idx"]), int(row["distance_bits"]))
        for row in reader
    ]
