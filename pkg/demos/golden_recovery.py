"""Simulate the golden synthetic data set, fit it and compare with the truth.

Run with ``python3 demos/golden_recovery.py [seed]``; takes well under a minute.
"""

import sys
import time
import warnings

import numpy as np

from gfamm import extract_composition_effect, extract_effect, fit_model
from gfamm.bayes_space import Grid
from gfamm.cli import GOLDEN_TERMS, parse_terms
from gfamm.fit import diagnostics
from gfamm.simulate import simulate


def rise(est, truth, w):
    return np.sum(w * (est - truth) ** 2) / np.sum(w * truth**2)


def main(seed=0):
    data, truth = simulate(seed=seed)
    print(f"{data.curves.n} regions x {data.curves.T} days, true dispersion {truth['dispersion']}")

    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fitted = fit_model(parse_terms(GOLDEN_TERMS), data)
    print(f"fit in {time.perf_counter() - start:.1f} s; edf {fitted.edf:.1f}, "
          f"dispersion {fitted.dispersion:.2f}, deviance explained {fitted.deviance_explained:.3f}")
    for w in caught:
        print("  note:", w.message)

    t = truth["t"]
    wt = Grid.from_points(t).weights
    b0 = extract_effect(fitted, "intercept", t=t)
    cover = np.mean((b0.lower <= truth["intercept"]) & (truth["intercept"] <= b0.upper))
    print(f"\nintercept: RISE {rise(b0.values, truth['intercept'], wt):.1e}, band coverage {cover:.2f}")

    xg = truth["smooth_x"]["x"]
    fx = extract_effect(fitted, "smooth_scalar(x)", x=xg)
    print(f"f(x):      RISE {rise(fx.values, truth['smooth_x']['f'], Grid.from_points(xg).weights):.3f}")

    sg = truth["density"]["s"]
    bst = extract_effect(fitted, "fun_composition(age)", s=sg, t=t)
    w2 = np.outer(Grid.from_points(sg).weights, wt)
    print(f"beta(s,t): RISE {rise(bst.values, truth['density']['beta'], w2):.3f}")

    comp = extract_composition_effect(fitted, "composition_linear(comp)")
    print("\ncomposition, ilr coefficients")
    for j, (est, tru, se) in enumerate(zip(comp.coef, truth["composition"]["beta"],
                                           np.sqrt(np.diag(fitted.coef_cov("composition_linear(comp)"))))):
        print(f"  ilr{j + 1}: estimate {est:+.3f} (se {se:.3f}), truth {tru:+.3f}")

    diag = diagnostics(fitted)
    print(f"\nPearson residual variance {diag['residual_variance']:.3f}; "
          f"lag-1..3 ACF {np.round(diag['acf'][1:4], 3)}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
