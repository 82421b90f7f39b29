"""What a rapidity certificate actually certifies.

A log-optimal plan on a scenario tree comes with a dual price process.
Three numbers make it a certificate: every node's price values the
incoming portfolio at exactly 1 (support), each price pair sits in the
dual cone of its transition (so priced wealth is a supermartingale for
every competitor), and the measured defect against a crowd of
competitors is nonpositive.  This script solves a small tree, walks one
scenario, then breaks the certificate on purpose.
"""

import numpy as np

from vngale import (
    ConeSpec,
    ConeTable,
    DualPlan,
    MarkovSpec,
    build_tree,
    check_rapid,
    solve_tree_log_optimal,
)

spec = MarkovSpec(["U", "D"], [[0.5, 0.5], [0.5, 0.5]])
table = ConeTable({
    "*->U": ConeSpec.proportional_tc([1.0, 2.0], 0.01, 0.02),
    "*->D": ConeSpec.proportional_tc([1.0, 0.5], 0.01, 0.02),
})

tree = build_tree(spec, horizon=4)
res = solve_tree_log_optimal(tree, table, x0=[0.5, 0.5])
print(f"tree nodes           {tree.n_nodes}")
print(f"expected log wealth  {res.objective:.8f}")
print(f"solver kkt residual  {res.kkt_residual:.1e}")

print()
print("one scenario, root to leaf (always-up):")
print(f"{'node':>4} {'state':>5}  {'portfolio':>22}  {'price':>22}  "
      f"{'p.x(parent)':>11}")
v = 0
while True:
    children = tree.children(v)
    port = np.array2string(res.plan.x[v], precision=4)
    if v == 0:
        print(f"{v:4d} {'-':>5}  {port:>22}  {'-':>22}  {'-':>11}")
    else:
        u = tree.parent[v]
        p = res.dual.prices[v]
        support = float(p @ res.plan.x[u])
        print(f"{v:4d} {tree.state_label(v):>5}  {port:>22}  "
              f"{np.array2string(p, precision=4):>22}  {support:11.8f}")
    if len(children) == 0:
        break
    v = children[0]

rep = check_rapid(res.plan, res.dual, table, competitors=50, seed=0)
print()
print(f"support residual        {rep.support_residual:.2e}")
print(f"dual cone residual      {rep.dual_cone_residual:.2e}")
print(f"supermartingale defect  {rep.supermartingale_defect:.2e}  "
      f"(vs {rep.competitors} competitors)")
print(f"verdict                 {rep.verdict}")

# now scale every price by 1.5: still a valid dual direction, but the
# support normalization breaks and the certificate must say so
scaled = DualPlan(tree, 1.5 * res.dual.prices, 1.5 * res.dual.terminal)
broken = check_rapid(res.plan, scaled, table, competitors=50, seed=0)
print()
print("after scaling all prices by 1.5:")
print(f"support residual        {broken.support_residual:.2f}")
print(f"verdict                 {broken.verdict}")
