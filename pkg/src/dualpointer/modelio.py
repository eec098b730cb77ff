"""Versioned binary model files.

Layout, all integers little-endian, all floats IEEE-754 float64:

    magic    8 bytes  b"DPTRMODL"
    version  u32      format version (currently 1)
    meta     u32 count, then per entry: str key, str value
    vocab    u32 count, then per non-reserved form: str form, u64 count
    index    u32 count, then per pretrained word: str word, u32 row
    tensors  u32 count, then per tensor: str name, u32 ndim, u64 dims, raw data
    crc      u32      CRC-32 of every preceding byte

where ``str`` is a u32 byte length followed by UTF-8 bytes.  Writing is
deterministic: identical parameters produce identical bytes.  Loading
verifies magic, version and checksum before reconstructing anything, so a
damaged file never yields a partial model.
"""
from __future__ import annotations

import struct
import zlib
from io import BytesIO
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .autodiff import Tensor
from .encoder import EncoderParams, LstmWeights
from .model import DEPS_ONLY, HEADS_ONLY, JOINT, MODES, ModelParams
from .pointer import DEPENDENTS, HEADS, PointerParams
from .vocab import EmbeddingTable, Vocabulary

__all__ = ["ModelFormatError", "FORMAT_VERSION", "MAGIC", "save_model", "load_model"]

MAGIC = b"DPTRMODL"
FORMAT_VERSION = 1


class ModelFormatError(Exception):
    """The stream is not a loadable model file."""


def _pack_str(out: BytesIO, s: str) -> None:
    raw = s.encode("utf-8")
    out.write(struct.pack("<I", len(raw)))
    out.write(raw)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError(
                f"truncated model file: needed {n} bytes at offset {self.pos}, "
                f"file ends at {len(self.data)}"
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def string(self) -> str:
        n = self.u32()
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as e:
            raise ModelFormatError(f"bad UTF-8 at offset {self.pos}: {e}") from None


def _meta_for(model: ModelParams) -> list[tuple[str, str]]:
    enc = model.encoder
    return [
        ("mode", model.mode),
        ("activation", model.activation),
        ("d_pretrained", str(enc.pretrained.dim)),
        ("d_random", str(enc.random.dim)),
        ("bilstm_hidden", str(enc.layers[0][0].hidden)),
        ("bilstm_levels", str(len(enc.layers))),
        ("ptr_hidden", str((model.heads_net or model.deps_net).hidden)),
        ("pretrained_indexed", "1" if enc.pretrained.index is not None else "0"),
    ]


def save_model(model: ModelParams, dest: BinaryIO | str | Path) -> None:
    """Serialize a model; every parameter must be finite."""
    for name, t in model.named_params():
        if not np.all(np.isfinite(t.data)):
            raise ValueError(f"refusing to save non-finite parameter {name}")
    out = BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", FORMAT_VERSION))

    meta = _meta_for(model)
    out.write(struct.pack("<I", len(meta)))
    for k, v in meta:
        _pack_str(out, k)
        _pack_str(out, v)

    forms = model.vocab.forms[1:]
    counts = model.vocab.counts[1:]
    out.write(struct.pack("<I", len(forms)))
    for f, c in zip(forms, counts):
        _pack_str(out, f)
        out.write(struct.pack("<Q", c))

    index = model.encoder.pretrained.index or {}
    out.write(struct.pack("<I", len(index)))
    for word, row in index.items():
        _pack_str(out, word)
        out.write(struct.pack("<I", row))

    named = model.named_params()
    out.write(struct.pack("<I", len(named)))
    for name, t in named:
        _pack_str(out, name)
        arr = np.ascontiguousarray(t.data, dtype="<f8")
        out.write(struct.pack("<I", arr.ndim))
        for d in arr.shape:
            out.write(struct.pack("<Q", d))
        out.write(arr.tobytes())

    body = out.getvalue()
    payload = body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    if isinstance(dest, (str, Path)):
        with open(dest, "wb") as fh:
            fh.write(payload)
    else:
        dest.write(payload)


def load_model(src: BinaryIO | str | Path) -> ModelParams:
    """Read a model file back; inverse of :func:`save_model`."""
    if isinstance(src, (str, Path)):
        with open(src, "rb") as fh:
            data = fh.read()
    else:
        data = src.read()

    r = _Reader(data)
    if r.take(len(MAGIC)) != MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"model format version {version} not supported (expected {FORMAT_VERSION})"
        )
    if len(data) < len(MAGIC) + 8:
        raise ModelFormatError("truncated model file")
    body, crc_bytes = data[:-4], data[-4:]
    expected = struct.unpack("<I", crc_bytes)[0]
    actual = zlib.crc32(body) & 0xFFFFFFFF
    if expected != actual:
        raise ModelFormatError(
            f"checksum mismatch over {len(body)} bytes: stored {expected:#010x}, "
            f"computed {actual:#010x}"
        )

    meta: dict[str, str] = {}
    for _ in range(r.u32()):
        k = r.string()
        meta[k] = r.string()
    try:
        mode = meta["mode"]
        activation = meta["activation"]
        d_random = int(meta["d_random"])
        hidden = int(meta["bilstm_hidden"])
        levels = int(meta["bilstm_levels"])
        indexed = meta["pretrained_indexed"] == "1"
    except KeyError as e:
        raise ModelFormatError(f"missing metadata entry {e}") from None
    if mode not in MODES:
        raise ModelFormatError(f"unknown mode {mode!r} in model file")

    nvocab = r.u32()
    forms, counts = [], []
    for _ in range(nvocab):
        forms.append(r.string())
        counts.append(r.u64())
    vocab = Vocabulary(forms, counts)

    index: dict[str, int] = {}
    for _ in range(r.u32()):
        word = r.string()
        index[word] = r.u32()

    tensors: dict[str, np.ndarray] = {}
    order: list[str] = []
    for _ in range(r.u32()):
        name = r.string()
        ndim = r.u32()
        shape = tuple(r.u64() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        raw = r.take(count * 8)
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        order.append(name)
    if r.pos != len(body):
        raise ModelFormatError(
            f"{len(body) - r.pos} unexpected trailing bytes at offset {r.pos}"
        )

    def grab(name: str) -> Tensor:
        if name not in tensors:
            raise ModelFormatError(f"model file lacks tensor {name!r}")
        return Tensor(tensors.pop(name), requires_grad=True)

    pretrained = EmbeddingTable(grab("emb.pretrained"), index=index if indexed else None)
    random_table = EmbeddingTable(grab("emb.random"), index=None)
    layers = []
    for li in range(levels):
        fwd = LstmWeights(grab(f"lstm.l{li}.fwd.w"), grab(f"lstm.l{li}.fwd.b"), hidden)
        bwd = LstmWeights(grab(f"lstm.l{li}.bwd.w"), grab(f"lstm.l{li}.bwd.b"), hidden)
        layers.append((fwd, bwd))
    encoder = EncoderParams(pretrained=pretrained, random=random_table, layers=layers)

    heads_net = deps_net = None
    if mode in (JOINT, HEADS_ONLY):
        heads_net = PointerParams(
            grab("ptr.heads.w"), grab("ptr.heads.b"), grab("ptr.heads.v"),
            orientation=HEADS, activation=activation,
        )
    if mode in (JOINT, DEPS_ONLY):
        deps_net = PointerParams(
            grab("ptr.deps.w"), grab("ptr.deps.b"), grab("ptr.deps.v"),
            orientation=DEPENDENTS, activation=activation,
        )
    if tensors:
        raise ModelFormatError(f"unexpected tensors in model file: {sorted(tensors)}")

    if random_table.dim != d_random:
        raise ModelFormatError(
            f"random embedding dimension {random_table.dim} contradicts metadata {d_random}"
        )
    return ModelParams(vocab, encoder, heads_net, deps_net, mode)
