"""Horvitz-Thompson totals from streamed samples."""

import numpy as np

from streamsamp import Frame, ht_estimate, run_stream
from streamsamp.cli import normalize_sizes
from streamsamp.estimators import ht_totals
from streamsamp.oracle import replicate_blocks

rng = np.random.default_rng(3)
size = rng.lognormal(0.0, 0.7, 500)
y = 4.0 * size + rng.normal(0, 0.5, 500)

# inclusion probabilities proportional to size, 50 units expected
pi = normalize_sizes(size, 50)
frame = Frame.from_pis(pi.tolist(), y=y.tolist())
print("true total:", round(y.sum(), 3))

one = ht_estimate(run_stream(frame, seed=11), frame)
print("one sample:", one.as_dict())

R = 50_000
est = np.concatenate([ht_totals(sel, frame) for sel in replicate_blocks(frame, "ids", R, 5)])
print(f"mean of {R} estimates: {est.mean():.3f} (se {est.std(ddof=1) / np.sqrt(R):.3f})")

# equal probabilities waste the size information
flat = Frame.from_pis([0.1] * 500, y=y.tolist())
est_flat = np.concatenate([ht_totals(sel, flat) for sel in replicate_blocks(flat, "ids", R, 5)])
print(f"sd with pi ~ size: {est.std():.2f}; with equal pi: {est_flat.std():.2f}")
