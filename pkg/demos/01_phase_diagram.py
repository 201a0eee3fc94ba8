"""Phase objects per interaction order: domain floor, threshold, and the
free-energy density / spin magnitude just above threshold.

The threshold H_p* separates couplings whose monomial contributes nothing to
the free energy from couplings that dominate it; the floor h_min is where the
concentration location lambda_p stops existing at all.
"""

from heavyspin import phase

print(f"{'p':>3} {'h_min':>12} {'H_p*':>12} {'lambda@1.1H*':>14} "
      f"{'f@1.1H*':>12} {'t@1.1H*':>10}")
for p in range(2, 9):
    hs = phase.h_star(p)
    h = 1.1 * hs
    print(f"{p:>3} {phase.h_min(p):>12.4f} {hs:>12.4f} "
          f"{phase.lambda_p(p, h):>14.6f} {phase.f_p(p, h):>12.6f} "
          f"{phase.t_magnitude(p, h):>10.6f}")

print()
print("p=2 closed forms: lambda_2(H) = (H-1)/4, H_2* = 1,"
      " f_2(H) = (H-1)/2 - ln(H)/2")
for H in (1.5, 2.0, 3.0, 5.0):
    print(f"  f_2({H}) = {phase.f_p(2, H):.10f}")
