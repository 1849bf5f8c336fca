"""Rate-distortion envelopes of the four coding paradigms, one instance.

For a 16-symbol pixel model this sweeps a slope grid with the certified
convex solver and prints the four envelopes side by side:

  res        : residual coded alone
  cond_ideal : symbol coded against the raw prediction (no bottleneck)
  cond       : symbol coded against the quantized prediction
  condres    : residual coded against the quantized prediction

Then it condenses each pairwise comparison into a BD-rate percentage
(average rate delta at matched quality).

Run:  python3 demos/rd_comparison.py [p] [Q]
"""

import sys

from crlab import PixelModelParams, bd_rate_matrix, compare_paradigms

p = float(sys.argv[1]) if len(sys.argv) > 1 else 0.3
Q = float(sys.argv[2]) if len(sys.argv) > 2 else 4.0
M = 16

params = PixelModelParams(p=p, Q=Q, M=M)
curves = compare_paradigms(params)
print(f"pixel model p={p} Q={Q} M={M}; "
      f"{sum(len(c.points) for c in curves.values())} envelope points\n")

# sample each envelope at shared distortions for a readable table
ds = [0.05, 0.2, 0.8, 3.0, 10.0]
print("rate in bits at matched distortion (- means outside the span)")
print("D        " + "".join(f"{label:>12}" for label in curves))
for d in ds:
    cells = []
    for c in curves.values():
        try:
            cells.append(f"{c.rate_at(d):>12.4f}")
        except Exception:
            cells.append(f"{'-':>12}")
    print(f"{d:<9g}" + "".join(cells))

print("\nBD-rate matrix, percent (negative: row 'test' beats column 'ref'):")
mat = bd_rate_matrix(curves, peak=M - 1)
labels = list(curves)
print(f"{'test/ref':>12}" + "".join(f"{l:>12}" for l in labels))
for t in labels:
    row = []
    for r in labels:
        v = mat[(r, t)]
        row.append(f"{'-':>12}" if v is None else f"{v:>+11.2f}%")
    print(f"{t:>12}" + "".join(row))

print(
    "\nAt the default p=0.3 the conditional-residual envelope sits on or"
    "\nbelow everything reachable with a bottlenecked prediction. Try"
    "\n  python3 demos/rd_comparison.py 0.7 4"
    "\nfor the surprise: with mostly-useless predictions, coding the"
    "\nresidual conditionally is worse than coding the symbol"
    "\nconditionally across the mid-distortion band, even though both of"
    "\nits lossless endpoints are better. The envelopes genuinely cross."
)
