"""Compare the five metrics on the same pair of SPD matrices."""

import numpy as np

from spdstats.metrics import metric_names, get_metric, distance

rng = np.random.default_rng(0)
a = rng.standard_normal((4, 4))
sigma = a @ a.T + np.eye(4)
b = rng.standard_normal((4, 4))
lam = b @ b.T + np.eye(4)

print("distances between the same two matrices:")
for name in metric_names():
    print(f"  {name:18s} {distance(get_metric(name), sigma, lam):9.4f}")

print("\nmidpoints, exp(a, log(a, b) / 2):")
for name in metric_names():
    m = get_metric(name)
    mid = m.exp(sigma, 0.5 * m.log(sigma, lam))
    w = np.linalg.eigvalsh(mid)
    print(f"  {name:18s} eigenvalues {np.round(w, 3)}")

# exp and log are inverse to each other along any of the geodesics
m = get_metric("airm")
v = m.log(sigma, lam)
back = m.exp(sigma, v)
print(f"\nairm exp(log) round-trip error: {np.abs(back - lam).max():.2e}")
print(f"airm norm of log tangent equals the distance: "
      f"{np.linalg.norm(m.vec(sigma, v)):.6f} vs {distance(m, sigma, lam):.6f}")
