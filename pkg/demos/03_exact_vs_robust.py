"""Exact evasion against robust evasion, and why the closure decides between them.

example1: constants r with 0 < |r| < 1 all avoid 0, so evasion is exact, but
every inflation of {0} catches some small |r|.  Closing the bundle adds r = 0.

example2: every y_p eventually hits 0, yet y_p stays above 0.1 for longer and
longer as p -> 0, so evasion survives inflating the target.  The closure adds
y_0 = 1, which avoids 0 forever.

Run: python demos/03_exact_vs_robust.py
"""

from bundlegame import corollary_checks, theorem2_check
from bundlegame.fixtures import example1, example2

for fx in (example1(), example2()):
    rep = theorem2_check(fx.family, fx.target, fx.eps_list, fx.horizons, probe=fx.extras.get("exact_probe"))
    print(f"== {fx.name} (certified up to horizon {rep.values.horizon})")
    print(f"  exact on the original family   : {rep.exact_original.holds}")
    print(f"  robust on the original family  : {rep.robust_original.holds} (eps witness {rep.robust_original.witness})")
    print(f"  exact on the closed family     : {rep.exact_extended.holds}")
    print(f"  verdict                        : {rep.verdict}")
    cor = corollary_checks(fx.family, fx.target, fx.eps_list, fx.horizons)
    print(f"  closure-adds-nothing check     : {cor.corollary1}; nested-limit check: {cor.corollary2}")
    print(f"  note: {fx.notes}")
