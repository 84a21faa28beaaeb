"""The three-block construction and what it can show at desk scale.

Each block is split into a copied head B1, a zero run B2 and a replay B3
that repeats x from the start of the block. The replay means the last
quarter of the block contains no word that was not already seen, while
a random x has about (1 - e^(-1/4)) e^(-3/4) of its words fresh there.

The zero run B2 has length 2**k_i / z(2i). With the even entries of z
constant it pushes the digit-0 frequency well above 1/2; with z(2i)
growing the push fades, but only slowly: at the last step reachable
with 2**30 positions (k = 16) z(6) is 8 and the excess is still ~0.08.

Run: python3 demos/03_d2_construction.py
"""

import math

import numpy as np

from pgeneric import ZSequence, build_schedule, f_d2, fresh_word_count, stream_random

x = stream_random(2, 42)
target = (1 - math.exp(-0.25)) * math.exp(-0.75)

for spec in ["even=id,odd=const:4", "even=const:4,odd=const:4"]:
    z = ZSequence.parse(spec)
    schedule = build_schedule("d2bold", z, steps=3)
    total = 2 ** schedule.exponents[-1]
    f = f_d2(z, schedule, x).buffer(total)
    xb = x.buffer(total)
    print(f"z: {spec}   exponents {schedule.exponents}")
    for bl in schedule.blocks:
        m = bl.stop - bl.stop // 4
        fresh_f = fresh_word_count(f, bl.k, bl.start, m, bl.stop) if bl.k >= 4 else None
        fresh_x = fresh_word_count(xb, bl.k, bl.start, m, bl.stop) / bl.stop
        n = bl.zero_stop
        freq0 = np.count_nonzero(f.digits[:n] == 0) / n
        print(f"  step {bl.step} k={bl.k:<2} z(2i),z(2i+1)={bl.z_values}  "
              f"fresh f={fresh_f}  fresh x={fresh_x:.4f} (~{target:.4f})  freq0 at {n}: {freq0:.4f}")
    print()
