"""The three regularizer terms, their gradients, and what each one does.

CD spreads same-class points apart in angle, CDM aligns synthetic
directions with real ones, EDM pulls synthetic points onto the real cloud
in distance. All gradients are analytic; central finite differences verify
them here at every step.
"""

import numpy as np

from dire import (DireWeights, EmbeddingSet, Rng, cd_loss, cdm_loss,
                  dire_loss, edm_loss, finite_diff_check, rng_normal)

rng = Rng(3)
w = DireWeights(r_c=1.0, r_e=0.1, reduction="mean")

x = rng_normal(rng.split(0), 6, 4)          # synthetic class embeddings
y = rng_normal(rng.split(1), 40, 4) + 2.0   # real class embeddings

# --- values on the toy pair ---
cd, g_cd = cd_loss(x, w)
cdm, g_cdm = cdm_loss(x, y, w)
edm, g_edm = edm_loss(x, y, w)
print(f"cd={cd:.4f}  cdm={cdm:.4f}  edm={edm:.4f}")

# --- every analytic gradient agrees with central differences ---
print("finite-difference max relative errors:")
print("  cd :", finite_diff_check(lambda m: cd_loss(m, w), x, h=1e-5))
print("  cdm:", finite_diff_check(lambda m: cdm_loss(m, y, w), x, h=1e-5))
print("  edm:", finite_diff_check(lambda m: edm_loss(m, y, w), x, h=1e-5))

# --- descent on each term in isolation shows its geometric role ---
def descend(loss_fn, steps=300, lr=1.0):
    pts = x.copy()
    for _ in range(steps):
        _, g = loss_fn(pts)
        pts = pts - lr * g
    return pts


after_cd = descend(lambda m: cd_loss(m, w))
after_edm = descend(lambda m: edm_loss(m, y, w))

def mean_pair_cos(m):
    u = m / np.linalg.norm(m, axis=1, keepdims=True)
    c = u @ u.T
    return (c.sum() - np.trace(c)) / (len(m) ** 2 - len(m))


def mean_dist_to_real(m):
    return float(np.mean([np.linalg.norm(y - p, axis=1).min() for p in m]))


print(f"\nmean pairwise cos: start {mean_pair_cos(x):+.3f}, "
      f"after CD descent {mean_pair_cos(after_cd):+.3f}")
print(f"mean distance to real cloud: start {mean_dist_to_real(x):.2f}, "
      f"after EDM descent {mean_dist_to_real(after_edm):.2f}")

# --- combined per-class loss over an embedding set ---
syn_set = EmbeddingSet({0: x, 1: rng_normal(rng.split(2), 6, 4)})
real_set = EmbeddingSet({0: y, 1: rng_normal(rng.split(3), 40, 4) - 2.0})
per_class, total = dire_loss(syn_set, real_set, w)
for c, breakdown in per_class.items():
    print(f"class {c}: l_syn={breakdown.l_syn:.4f} "
          f"(cd={breakdown.cd:.3f} cdm={breakdown.cdm:.3f} edm={breakdown.edm:.3f})")
print(f"total l_syn={total.l_syn:.4f}, stacked gradient shape {total.grad.shape}")
