"""From near-identity generators to second-eigenvalue statistics.

The escape construction takes long words in a fixed generator set,
buckets them by proximity at a target scale, and returns a new set T of
nearby-but-distinct elements.  Three things are checked along the way:
the word-length bracket for products of T, the decay of T-walk mass near
proper subgroups, and the census of averaging eigenvalues that land in
(1/2, 1) across representation levels as the proximity scale shrinks.
"""

from gaplab.escape import EscapeConfig, build_T, escape_curve, verify_claim1
from gaplab.groups import lps_p5, rational_near_identity_triple
from gaplab.measures import SubgroupSpec
from gaplab.su2reps import second_gap_census

print("escape sets from the p = 5 generators, ell = 10 words")
print("  eps    bucket r   |T|   support radius")
sets = {}
for eps, cap, seed in ((0.2, 2000, 11), (0.1, 3000, 12), (0.05, 4000, 13)):
    cfg = EscapeConfig(base=lps_p5(), ell=10, a=0, b=1,
                       bucket_resolution=eps / 3, sample_cap=cap, seed=seed)
    T, rep = build_T(cfg)
    sets[eps] = T
    print(f"  {eps:4.2f}   {eps / 3:7.4f}   {rep.t_size:3d}   {rep.epsilon_prime:.4f}")

print("\ncumulative eigenvalues in (1/2, 1) over levels n <= 120:")
for eps, T in sets.items():
    rows = second_gap_census(T, 120)
    print(f"  eps = {eps:4.2f}: {rows[-1].cumulative}")
print("closer-to-identity sets pack more spectrum near the top of the")
print("band, the small-scale phenomenon the census is built to expose.\n")

print("-" * 64)
print("regression escape set on SL(2,R): rational triple, ell = 9")
cfg = EscapeConfig(base=rational_near_identity_triple(), ell=9, a=0, b=1,
                   bucket_resolution=0.3, sample_cap=300, seed=1)
T9, _ = build_T(cfg)

claim = verify_claim1(T9, ell=9, n_max=2)
print(f"word-length bracket n*ell <= |g|_S <= 6*n*ell: "
      f"{claim.checked} products checked, {len(claim.violations)} violations")

print("\nmass of mu^{*2n} within 0.05 of proper subgroups:")
print("   n   rotation   diagonal   upper-tri")
curves = {
    fam: {r.n: r.mass for r in escape_curve(T9, SubgroupSpec(fam), (0.05,), 5)}
    for fam in ("rotation", "diagonal", "upper_triangular")
}
for n in range(1, 6):
    row = [curves[f][n] for f in ("rotation", "diagonal", "upper_triangular")]
    print(f"  {n:2d}   {row[0]:8.4f}   {row[1]:8.4f}   {row[2]:9.4f}")
print("\nall three curves fall below 0.1 by n = 5: the walk escapes every")
print("proper closed subgroup neighborhood at a uniform rate.")
