"""A tour of the package on the bundled systems in demos/data.

Run with ``python3 -u demos/walkthrough.py`` after installing the package.
"""

import os
from fractions import Fraction as F

from ifsline import (
    InfiniteWordSpec,
    bowen_dimension,
    demonstrate_wsp_failure,
    find_common_fixed_point,
    interpolate_to_common_fixed_point,
    lemma1_check,
    perturb_separate,
    phi_count,
    similarity_dimension,
    ssp_check,
    wsp_criterion_search,
    wsp_unit_fraction_certificate,
)
from ifsline.cli import classify
from ifsline.errors import ResourceLimitError
from ifsline.io import load_family, load_ifs
from ifsline.maps import affine_ifs

DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")


def heading(text):
    print(f"\n== {text}")


def dimensions():
    heading("dimensions")
    for name in ("cantor", "mixed", "mixed_small"):
        ifs = load_ifs(os.path.join(DATA, f"{name}.json"))
        s0 = similarity_dimension(ifs.ratios())
        bw = bowen_dimension(ifs)
        print(f"{name:12s} s0 = {s0.value:.6f}  bowen in [{bw.lower:.6f}, {bw.upper:.6f}]")


def separation():
    heading("separation")
    cantor = load_ifs(os.path.join(DATA, "cantor.json"))
    print("cantor SSP gap:", ssp_check(cantor).gap)
    lattice = load_ifs(os.path.join(DATA, "lattice.json"))
    crit = wsp_criterion_search(lattice, 6)
    cert = wsp_unit_fraction_certificate(lattice)
    print("lattice d_n:", [str(v) for v in crit.values], "certified lower bound:", cert.bound)
    mixed = load_ifs(os.path.join(DATA, "mixed.json"))
    try:
        wsp_criterion_search(mixed, 31, budget=20000)
    except ResourceLimitError as exc:
        part = exc.partial
        print(f"mixed d_n, complete through n = {part.complete_through}:", [str(v) for v in part.values[:6]], "...")
    print("mixed Phi_2 count at x = 0, r = 1e-4:", phi_count(mixed, 0, F(1, 10**4), 2).count)


def witness():
    heading("WSP failure witness")
    mixed = load_ifs(os.path.join(DATA, "mixed.json"))
    base = find_common_fixed_point(mixed, 3)
    print(f"common fixed point {base.x_tilde} of words {base.omega}, {base.tau}; derivatives {base.a}, {base.b}")
    demo = demonstrate_wsp_failure(mixed, base, target_count=40)
    for p, q, count in demo.history:
        print(f"  Dirichlet pair ({p}, {q}): {count} distinct nearby maps")
    print("eta =", demo.eta)


def perturbation():
    heading("separate, then interpolate")
    binary = affine_ifs([("1/2", 0), ("1/2", "1/2")], rho="3/4", beta="1/4")
    i, j = InfiniteWordSpec((1,), (2,)), InfiniteWordSpec((2,), (1,))
    sep = perturb_separate(binary, i, j, F(1, 100))
    print(f"bump of height {sep.eps} separates the two projections by at least {sep.lower_bound}")
    res = interpolate_to_common_fixed_point(binary, sep.system, i=i, j=j)
    print(f"common fixed point at alpha ~ {float(res.alpha):.6f}, x ~ {float(res.x_tilde):.6f}")


def families():
    heading("translation families")
    for name in ("cantor_family", "ratio06_family"):
        fam = load_family(os.path.join(DATA, f"{name}.json"))
        cert = lemma1_check(fam)
        rep = classify(fam)
        zeta = cert.zeta if cert is not None else None
        print(f"{name:15s} transversality zeta = {zeta}  ->  {rep.case} {rep.label}")
    rep = classify(load_ifs(os.path.join(DATA, "mixed_small.json")))
    print(f"{'mixed_small':15s} s0 = {rep.s0.value:.4f}  ->  {rep.case} {rep.label}")


if __name__ == "__main__":
    dimensions()
    separation()
    witness()
    perturbation()
    families()
