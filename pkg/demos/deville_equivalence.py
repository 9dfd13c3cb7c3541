"""The streaming sampler and Deville's systematic procedure give the same design."""

from streamsamp import Frame, enumerate_deville_design, enumerate_ids_design
from streamsamp.oracle import compare_tables

frame = Frame.from_pis([0.3, 0.7, 0.5, 0.5, 0.45, 0.55])

streaming = enumerate_ids_design(frame)
systematic = enumerate_deville_design(frame)

print(f"{'sample':<14}{'streaming':>12}{'Deville':>12}")
for s in sorted(set(streaming.entries) | set(systematic.entries)):
    print(f"{'{' + ','.join(s) + '}':<14}{streaming.entries.get(s, 0):12.6f}{systematic.entries.get(s, 0):12.6f}")

print("\nlargest gap:", compare_tables(streaming, systematic).max_deviation)

# a total that is not a whole number: the last window is closed by phantom mass
short = Frame.from_pis([0.4, 0.3, 0.9])
gap = compare_tables(enumerate_ids_design(short), enumerate_deville_design(short, phantom=True)).max_deviation
print("non-integer total, largest gap:", gap)
