"""How the exponential penalty behaves as eps shrinks.

Inside the ball (s = |u|^2 - 1 <= 0) the coefficient sits at its floor delta.
Outside it grows like exp(s/eps), so for small eps even a tiny overshoot is
expensive.  The nodal map Phi(u) = k(|u|^2 - 1) u stays monotone throughout.
"""
import numpy as np

from ballvi.penalty import PenaltyParams, k_eval, phi_apply, psi_eval

delta = 0.1
s = np.array([-0.5, 0.0, 1e-3, 1e-2, 5e-2])

print("k(s) for s =", s)
for eps in (1e-1, 1e-2, 1e-3):
    p = PenaltyParams(eps, delta)
    print(f"  eps={eps:g}:", np.array2string(k_eval(s, p), precision=4))

# overshoot that a given reaction force costs: k = 1 + delta needs s = eps ln 2
for eps in (1e-1, 1e-2, 1e-3):
    print(f"eps={eps:g}: |u| reaches {np.sqrt(1 + eps * np.log(2)):.6f} when k - delta = 1")

p = PenaltyParams(1e-2, delta)
print("Psi(s), power 2:", [round(psi_eval(x, p, 2), 6) for x in (-0.5, 0.0, 0.02)])

rng = np.random.default_rng(0)
u, v = rng.uniform(-2, 2, (2, 5000, 2))
gap = np.sum((phi_apply(u, p) - phi_apply(v, p)) * (u - v), axis=1)
print(f"monotonicity: min <Phi(u) - Phi(v), u - v> over 5000 pairs = {gap.min():.3e}")
