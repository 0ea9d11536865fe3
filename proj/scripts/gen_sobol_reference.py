"""Writes unscrambled scipy Sobol points used as a test oracle."""
import sys

from scipy.stats import qmc

d, n = 10, 64
pts = qmc.Sobol(d=d, scramble=False).random(n)
out = sys.argv[1] if len(sys.argv) > 1 else "tests/data/sobol_scipy_d10.txt"
with open(out, "w") as f:
    f.write(f"{d} {n}\n")
    for row in pts:
        f.write(" ".join(repr(float(v)) for v in row) + "\n")
