"""Regenerate include/cgp/detail/sobol_table.hpp from the Joe-Kuo direction numbers shipped with scipy."""
import os
import numpy as np
import scipy

MAX_DIM = 1024
path = os.path.join(os.path.dirname(scipy.__file__), "stats", "_sobol_direction_numbers.npz")
z = np.load(path)
poly, vinit = z["poly"][:MAX_DIM], z["vinit"][:MAX_DIM]
out = ["#pragma once", "", "// Joe & Kuo (2008) direction numbers, new-joe-kuo-6.21201, first %d dimensions." % MAX_DIM,
       "// Generated by scripts/gen_sobol_table.py; do not edit.", "",
       "#include <cstdint>", "", "namespace cgp::detail {", "",
       "inline constexpr int kSobolMaxDim = %d;" % MAX_DIM, "inline constexpr int kSobolMaxDegree = 18;", "",
       "inline constexpr std::uint32_t kSobolPoly[kSobolMaxDim] = {"]
for i in range(0, MAX_DIM, 16):
    out.append("    " + ", ".join(str(int(p)) for p in poly[i:i + 16]) + ",")
out.append("};")
out.append("")
out.append("inline constexpr std::uint32_t kSobolInit[kSobolMaxDim][kSobolMaxDegree] = {")
for row in vinit:
    m = max(int(row.nonzero()[0].max()) + 1 if row.any() else 1, 1)
    out.append("    {" + ", ".join(str(int(v)) for v in row[:m]) + "},")
out.append("};")
out.append("")
out.append("}  // namespace cgp::detail")
os.makedirs("include/cgp/detail", exist_ok=True)
with open("include/cgp/detail/sobol_table.hpp", "w") as f:
    f.write("\n".join(out) + "\n")
