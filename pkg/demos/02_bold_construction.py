"""Zeroing the tail of each block removes distinct words.

f(z) copies a random x on the head of each block [2**k_(i-1), 2**k_i) and
writes zeros on the last 2**k_i / z(i) positions. With z constant 2 half
of every block is zeros, so only about 1 - exp(-1/2) of the k_i-words
appear in the prefix instead of the 1 - 1/e a random prefix shows.

Run: python3 demos/02_bold_construction.py
"""

import math

from pgeneric import ZSequence, build_schedule, distinct_fraction, f_bold, stream_random

z = ZSequence.parse("tail=const:2")
schedule = build_schedule("boldfast", z, steps=2)
print("exponents:", schedule.exponents)
for block in schedule.blocks:
    print(f"  step {block.step}: copy x on {block.copy}, zeros on {block.zeros}")

x = stream_random(2, 42)
f = f_bold(z, schedule, x)
k = schedule.exponents[-1]
n = 2**k

print(f"\ndistinct {k}-words in the first 2**{k} digits")
print(f"  x      {float(distinct_fraction(x.buffer(n), k, n)):.4f}   (1 - 1/e      = {1 - math.exp(-1):.4f})")
print(f"  f(z)   {float(distinct_fraction(f.buffer(n), k, n)):.4f}   (1 - e^(-1/2) = {1 - math.exp(-0.5):.4f})")
