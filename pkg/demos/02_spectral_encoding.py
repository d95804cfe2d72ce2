"""What a sequence looks like after spectral encoding."""

import numpy as np

from aaspectra.aaindex import load_aaindex
from aaspectra.encoding import encode_sequence, fft_magnitude, spectral_encode, zero_pad
from aaspectra.propgroups import build_descriptors

table = build_descriptors(load_aaindex())
hyd = next(d for d in table if d.keyword == "hydropathy")

# a peptide with hydrophobic residues every 3.6 positions, as in an amphipathic helix
seq = "LKKLLKLLKKLLKLLKKL"
signal = encode_sequence(seq, hyd)
padded = zero_pad(signal, 32)
mag = fft_magnitude(padded.samples)
print(f"{seq} -> {signal.samples.size} samples, padded to {padded.samples.size}")
print("bin  magnitude")
for k, m in enumerate(mag):
    print(f"{k:3d}  {m:8.3f} {'#' * int(round(m))}")
peak = 1 + int(np.argmax(mag[1:]))
print(f"\nstrongest non-DC bin {peak}: period about {32 / peak:.1f} residues")

feats = spectral_encode(seq, list(table), 32)
print(f"all groups: {len(feats)} vectors of {feats[0].magnitudes.size} bins")
