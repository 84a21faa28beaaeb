"""How close do Z-profiles of a random stream get to the Poisson law?

A seeded random stream is compared with a de Bruijn stream. The random
stream's deviation shrinks as k grows; the de Bruijn stream has every word
exactly once and so stays far from Po(1) no matter how large k is.

Run: python3 demos/01_random_vs_debruijn.py
"""

from pgeneric import stream_debruijn, stream_random, z_deviation, z_profile

K_MAX = 16

random_buf = stream_random(2, 42).buffer(2**K_MAX + K_MAX)

print("k   sup|Z_j - pmf_j| random   Z_0 random   Z_1 de Bruijn (conv. A / B)")
for k in range(6, K_MAX + 1, 2):
    prof = z_profile(random_buf, k, 1)
    sup, _ = z_deviation(prof)

    db = stream_debruijn(2, k).buffer(2**k + k)
    a = z_profile(db, k, 1, convention="A")[1]
    b = z_profile(db, k, 1, convention="B")[1]
    print(f"{k:<3} {sup:>24.5f} {float(prof[0]):>12.5f}   {float(a):.5f} / {float(b):.0f}")

# With b**k + 1 windows the de Bruijn prefix sees one word twice, so
# convention A lands one or two words short of Z_1 = 1.
