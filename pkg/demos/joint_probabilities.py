"""Closed-form pairwise inclusion probabilities, checked against enumeration."""

import numpy as np

from streamsamp import Frame, build_window_layout, enumerate_ids_design, joint_matrix

frame = Frame.from_pis([0.7, 0.6, 0.7, 0.4, 0.8, 0.8])
layout = build_window_layout(frame)
for w in layout.windows:
    print(f"window {w.index}: units {w.start_index + 1}..{w.end_index + 1}, straddler", end=" ")
    print("none" if w.cross_border_index is None else f"{w.cross_border_index + 1} split {w.pi_v1:.2f}/{w.pi_v2:.2f}")

m = joint_matrix(frame)
np.set_printoptions(precision=4, suppress=True)
print("\nclosed form:\n", m.values)

exact = enumerate_ids_design(frame).pairwise(frame.ids)
print("\nmax gap to enumeration:", np.abs(m.values - exact).max())

# fixed size n: every row of the off-diagonal sums to (n - 1) pi_j
n = frame.sample_size
rows = m.values.sum(axis=1) - np.diag(m.values)
print("row sums / ((n-1) pi):", rows / ((n - 1) * frame.pi))

# units in the same window are never drawn together; distant ones are nearly independent
ratio = m.values / np.outer(frame.pi, frame.pi)
print("\npi_jk / (pi_j pi_k):\n", ratio)
