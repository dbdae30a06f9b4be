"""Random singlet toy model: short-range pairs obey an area law, long-range ones do not.

With exponentially decaying pair weights the shell mutual information settles
at a value independent of the region radius. With Lorentzian weights it keeps
growing logarithmically with the radius.
"""

from arealaw.singlet import SingletModel, scaling_analysis

short = scaling_analysis(SingletModel("exponential", 3), [60, 120, 240], range(0, 19))
print("exponential xi=3:", short.verdicts, f"decay length {short.fits['decay_length']:.2f}")

long = scaling_analysis(SingletModel("lorentzian", 1), [50, 100, 200, 400, 800], [0, 2, 5])
print("lorentzian a=1:", long.verdicts)
for radius, i0 in zip([50, 100, 200, 400, 800], long.fits["I0"]):
    print(f"  R = {radius:>4}: I(L=0) = {i0:.3f}")
