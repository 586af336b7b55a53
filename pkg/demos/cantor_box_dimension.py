#!/usr/bin/env python3
"""Box dimension of a self-similar repeller versus the pressure bound.

For expanding maps the bound reads dim_B(repeller) <= n + P(phi)/s with
phi = -log|det Df|.  On the middle-third Cantor repeller everything is
exact: P = log(2/3), s = log 3, so the bound is log 2 / log 3 -- and it
is attained, since that IS the box dimension of the Cantor set.
"""

import math

from hypdim import (
    bound_report,
    box_count,
    build_cantor_repeller,
    invariant_set_sample,
    measure_box_dimension,
)

model = build_cantor_repeller(3, (0, 2))
rep = bound_report(model)
print(f"pressure P(phi) = {rep.pressure.value:+.9f}")
print(f"expansion  s    = {rep.expansion.value:.9f}")
print(f"bound n + P/s   = {rep.bound:.9f}")
print(f"log 2 / log 3   = {math.log(2) / math.log(3):.9f}")
print()

sample = invariant_set_sample(model, depth=10)
print(f"repeller sample: {len(sample)} cylinder centers at depth 10")
print("triadic box counts (scale 3^-m -> count, doubling each level):")
for m in range(1, 9):
    print(f"  3^-{m}: {box_count(sample, 3.0 ** -m)}")

est = measure_box_dimension(sample, [3.0**-m for m in range(2, 10)])
print()
print(f"fitted dimension: {est.slope:.6f}  (residual {est.residual:.2e})")
print(f"gap to the bound: {est.slope - rep.bound:+.2e}")

full = build_cantor_repeller(2, (0, 1))
print()
print("keeping every branch of x -> 2x mod 1 makes the circle the repeller:")
print(f"  bound = {bound_report(full).bound}, classification = {bound_report(full).classification}")
