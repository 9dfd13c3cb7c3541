"""Draw a sample one unit at a time and watch the window bookkeeping."""

import numpy as np

from streamsamp import Frame, IdsSampler, UnitRecord
from streamsamp.oracle import monte_carlo_design

pis = [0.7, 0.6, 0.7, 0.25, 0.5, 0.25]
print("total =", sum(pis), "-> every run keeps", round(sum(pis)), "units\n")

sampler = IdsSampler.seeded(2024)
print(f"{'id':>3} {'pi':>5} {'window':>6} {'cross':>5} {'threshold':>9} {'u':>6}  selected")
for k, p in enumerate(pis, start=1):
    d = sampler.observe(UnitRecord(str(k), p))
    print(f"{d.unit_id:>3} {p:5.2f} {d.window:6d} {str(d.cross_border):>5} {d.threshold:9.4f} {d.u:6.3f}  {d.selected}")

# a longer stream, fed lazily from a generator
rng = np.random.default_rng(0)
stream = (UnitRecord(f"u{k}", float(p)) for k, p in enumerate(rng.uniform(0, 1, 100_000)))
sampler = IdsSampler.seeded(7)
taken = sum(d.selected for d in sampler.feed(stream))
print(f"\n100000-unit stream: F = {sampler.state.F:.3f}, selected {taken}")

# empirical inclusion rates over many runs of the small frame
frame = Frame.from_pis(pis)
table = monte_carlo_design(frame, "ids", 200_000, 1)
rates = table.inclusion(frame.ids)
print("\nMonte Carlo inclusion rates (200000 runs):")
for uid, p in zip(frame.ids, pis):
    print(f"  unit {uid}: pi = {p:.2f}, observed {rates[uid]:.4f}")
