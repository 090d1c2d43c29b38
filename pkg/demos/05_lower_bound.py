"""The sample-size lower bound as a function of dimension.

With delta = 0, alpha = 1/2 and k = d the bound reduces to T * 2 * 2^(d/2) / eps.
"""

from shuffleparity.panprivate import lower_bound_value

T = 1 / 64
print(" d   eps=0.5    eps=1.0    eps=2.0   (delta=1e-6, eps=1)")
for d in range(4, 17, 2):
    row = [lower_bound_value(d, d, eps, 0.0, T) for eps in (0.5, 1.0, 2.0)]
    approx = lower_bound_value(d, d, 1.0, 1e-6, T)
    print(f"{d:>2}  " + "  ".join(f"{v:9.2f}" for v in row) + f"   {approx:9.2f}")
