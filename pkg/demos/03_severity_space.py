"""Severity control in the speaker-embedding space.

A voice is a point in embedding space. Blending the typical and the
dysarthric embedding of the same speaker with weights summing to one moves
along the line through both voices; negative weights extrapolate beyond the
dysarthric end, i.e. "more impaired than the recordings".

Run from the repository root:  python demos/03_severity_space.py
"""

from pathlib import Path

import numpy as np

from dyspeech import SEVERITY_PRESETS, SpeakerEmbedding, combine, equal_weight_mean, validate_setting
from dyspeech.embeddings import read_embedding, write_embedding

out_dir = Path(__file__).parent / "output" / "embeddings"
out_dir.mkdir(parents=True, exist_ok=True)

# ---------------------------------------------------------------------------
# Two reference voices. Real embeddings come from a voice encoder; here two
# random but fixed 16-dim vectors stand in.
# ---------------------------------------------------------------------------
rng = np.random.default_rng(2)
typical = SpeakerEmbedding(rng.normal(size=16), "typical")
dysarthric = SpeakerEmbedding(rng.normal(size=16), "dysarthric")

# ---------------------------------------------------------------------------
# The built-in severity ladder. Sums stay at one (the affine constraint that
# keeps the result on the typical-dysarthric line); C and D extrapolate.
# ---------------------------------------------------------------------------
print(f"{'setting':>8}  {'weights':>14}  {'sum':>5}  {'convex':>6}  {'extrapolating':>13}")
for name, setting in SEVERITY_PRESETS.items():
    diag = validate_setting(setting)
    print(f"{name:>8}  {str(list(setting.weights)):>14}  {diag.weight_sum:5.2f}  "
          f"{str(diag.convex):>6}  {str(diag.extrapolating):>13}")
print()

# ---------------------------------------------------------------------------
# Geometry: distance of each blend from the typical voice grows along the
# ladder, and extrapolated settings land beyond the dysarthric reference.
# ---------------------------------------------------------------------------
dys_dist = np.linalg.norm(dysarthric.values - typical.values)
print(f"|dysarthric - typical| = {dys_dist:.3f}")
for name, setting in SEVERITY_PRESETS.items():
    blended = combine([typical, dysarthric], setting.weights)
    d = np.linalg.norm(blended.values - typical.values)
    marker = "beyond the dysarthric voice" if d > dys_dist + 1e-9 else "between the voices"
    print(f"  setting {name}: |blend - typical| = {d:.3f}  ({marker})")
print()

# the former default behavior is the midpoint, i.e. weights [0.5, 0.5]
mean = equal_weight_mean([typical, dysarthric])
midpoint = combine([typical, dysarthric], [0.5, 0.5])
assert np.allclose(mean.values, midpoint.values)
print(f"equal-weight mean == combine with [0.5, 0.5] (tag: {mean.source_tag})")
print()

# ---------------------------------------------------------------------------
# Embeddings travel as small text files: header with dimension and tag, one
# value per line, exact round trip.
# ---------------------------------------------------------------------------
path = out_dir / "typical.emb"
write_embedding(typical, path)
back = read_embedding(path, expected_dim=16)
assert np.array_equal(back.values, typical.values)
print(f"wrote and re-read {path} (dimension {back.dim}, tag {back.source_tag!r})")
