"""Sequence -> per-group numeric signal -> zero-padded FFT magnitude spectrum."""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .aaindex import AMINO_ACIDS
from .propgroups import AminoAcidDescriptor

RESIDUE_POLICIES = ("error", "skip", "mean")


class UnsupportedResidueError(ValueError):
    def __init__(self, residue: str, position: int):
        super().__init__(f"unsupported residue {residue!r} at position {position}")
        self.residue = residue
        self.position = position


class SequenceTooLongError(ValueError):
    pass


@dataclass(frozen=True)
class EncodedSignal:
    group_id: str
    samples: np.ndarray
    original_length: int


@dataclass(frozen=True)
class SpectralFeatures:
    group_id: str
    magnitudes: np.ndarray
    padded_length: int


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    if n < 1:
        raise ValueError("length must be positive")
    return 1 << (n - 1).bit_length()


def encode_sequence(seq: str, descriptor: AminoAcidDescriptor, policy: str = "error") -> EncodedSignal:
    """Map each residue to the descriptor weight of its amino acid.

    Positions in error messages are 1-based. ``policy`` controls non-canonical
    residues: ``error`` raises, ``skip`` drops them, ``mean`` substitutes the
    mean of the 20 weights.
    """
    if policy not in RESIDUE_POLICIES:
        raise ValueError(f"unknown residue policy {policy!r}")
    if not seq:
        raise ValueError("empty sequence")
    weights = descriptor.weights
    fill = float(np.mean([weights[aa] for aa in AMINO_ACIDS]))
    out = []
    for pos, ch in enumerate(seq.upper(), start=1):
        w = weights.get(ch)
        if w is not None:
            out.append(w)
        elif policy == "error":
            raise UnsupportedResidueError(ch, pos)
        elif policy == "mean":
            out.append(fill)
    if not out:
        raise ValueError("sequence has no encodable residues")
    return EncodedSignal(descriptor.group_id, np.array(out, dtype=float), len(out))


def zero_pad(signal: EncodedSignal, target: int) -> EncodedSignal:
    n = signal.samples.size
    if not is_power_of_two(target):
        raise ValueError(f"padding target {target} is not a power of two")
    if target < n:
        raise SequenceTooLongError(f"signal of length {n} exceeds padded length {target}")
    padded = np.zeros(target)
    padded[:n] = signal.samples
    return EncodedSignal(signal.group_id, padded, signal.original_length)


def fft(x) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT.

    Butterflies of each stage are applied as one vectorized operation.
    Length must be a power of two.
    """
    a = np.asarray(x, dtype=complex)
    n = a.shape[-1]
    if not is_power_of_two(n):
        raise ValueError(f"FFT length {n} is not a power of two")
    bits = n.bit_length() - 1
    # bit-reversal permutation
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    a = a[..., rev].copy()
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(a.shape[:-1] + (n // size, size))
        even = blocks[..., :half].copy()
        odd = blocks[..., half:] * tw
        blocks[..., :half] = even + odd
        blocks[..., half:] = even - odd
        a = blocks.reshape(a.shape)
        size *= 2
    return a


def fft_magnitude(padded) -> np.ndarray:
    """|X_k| for k = 0..P/2 of a real signal of power-of-two length P >= 2."""
    x = np.asarray(padded, dtype=float)
    n = x.shape[-1]
    if n < 2 or not is_power_of_two(n):
        raise ValueError(f"signal length {n} is not a power of two >= 2")
    return np.abs(fft(x)[..., : n // 2 + 1])


def spectral_encode(
    seq: str,
    descriptors: Sequence[AminoAcidDescriptor],
    padded_length: int,
    policy: str = "error",
) -> list[SpectralFeatures]:
    feats = []
    for d in descriptors:
        sig = zero_pad(encode_sequence(seq, d, policy), padded_length)
        feats.append(SpectralFeatures(d.group_id, fft_magnitude(sig.samples), padded_length))
    return feats


def dataset_padded_length(sequences: Sequence[str]) -> int:
    """Smallest power of two >= the longest sequence (minimum 2)."""
    return max(2, next_power_of_two(max(len(s) for s in sequences)))


def encode_batch(
    sequences: Sequence[str],
    descriptors: Sequence[AminoAcidDescriptor],
    padded_length: int,
    policy: str = "error",
) -> tuple[dict[str, np.ndarray], list[str | None]]:
    """Encode many sequences at once.

    Returns a mapping group_id -> (n_rows, P/2+1) magnitude matrix and a list
    of per-row error messages (None for rows that encoded). Failed rows hold
    NaN in every matrix.
    """
    n, n_bins = len(sequences), padded_length // 2 + 1
    signals = {d.group_id: np.zeros((n, padded_length)) for d in descriptors}
    errors: list[str | None] = [None] * n
    for i, seq in enumerate(sequences):
        try:
            for d in descriptors:
                signals[d.group_id][i] = zero_pad(encode_sequence(seq, d, policy), padded_length).samples
        except ValueError as exc:
            errors[i] = str(exc)
    out = {}
    for gid, sig in signals.items():
        mags = fft_magnitude(sig) if n else np.zeros((0, n_bins))
        for i, err in enumerate(errors):
            if err is not None:
                mags[i] = np.nan
        out[gid] = mags
    return out, errors


def feature_columns(n_groups: int, n_bins: int) -> list[str]:
    return [f"g{g + 1}_bin{k}" for g in range(n_groups) for k in range(n_bins)]


def write_feature_csv(path, matrices: dict[str, np.ndarray], ids: Sequence[str] | None = None) -> None:
    """One row per sequence, columns g<group>_bin<k>; ``path`` may be an open text file."""
    mats = list(matrices.values())
    n_bins = mats[0].shape[1] if mats else 0
    cols = feature_columns(len(mats), n_bins)
    full = np.hstack(mats) if mats else np.zeros((0, 0))

    def dump(fh):
        w = csv.writer(fh)
        w.writerow((["id"] if ids is not None else []) + cols)
        for i, row in enumerate(full):
            w.writerow(([ids[i]] if ids is not None else []) + [repr(float(v)) for v in row])

    if hasattr(path, "write"):
        dump(path)
    else:
        with open(path, "w", newline="") as fh:
            dump(fh)


_MAGIC = b"AASPEC1\n"


def write_feature_binary(path, matrices: dict[str, np.ndarray], padded_length: int) -> None:
    """Binary matrix: magic, uint32 header length, JSON header, float64 rows (LE)."""
    mats = list(matrices.values())
    full = np.hstack(mats) if mats else np.zeros((0, 0))
    header = {
        "padded_length": padded_length,
        "groups": list(matrices.keys()),
        "n_rows": int(full.shape[0]),
        "n_cols": int(full.shape[1]),
        "dtype": "<f8",
    }
    raw = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(full.astype("<f8").tobytes())


def read_feature_binary(path) -> tuple[dict, np.ndarray]:
    data = Path(path).read_bytes()
    if not data.startswith(_MAGIC):
        raise ValueError(f"{path}: not a feature matrix file")
    (hlen,) = struct.unpack_from("<I", data, len(_MAGIC))
    start = len(_MAGIC) + 4
    header = json.loads(data[start:start + hlen])
    body = np.frombuffer(data[start + hlen:], dtype=header["dtype"])
    expected = header["n_rows"] * header["n_cols"]
    if body.size != expected:
        raise ValueError(f"{path}: expected {expected} values, found {body.size}")
    return header, body.reshape(header["n_rows"], header["n_cols"]).copy()
