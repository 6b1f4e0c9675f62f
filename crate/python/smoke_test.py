"""Smoke test for the adsnull_py extension.

Build and install it first:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/adsnull_py-*.whl
    python python/smoke_test.py
"""

import math
import tempfile

import adsnull_py as ad


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    a = ad.Mat2(0.0, 2.0, -0.5, 0.0)
    e = ad.sl2_exp(a)
    check(abs(e.det() - 1.0) < 1e-12, "sl2_exp is unimodular")
    check(abs(ad.qform(ad.Mat2.identity()) + 1.0) < 1e-15, "q(Id) = -1")

    k = ad.kappa_mn(7, 3)
    check(ad.torus_knot_type(7, 3) == (2, 5), "knot type of (7,3)")
    length, _ = ad.closure_period(k)

    curve = ad.integrate_curve("mn:7,3", 1e-3)
    gap = curve.gamma[-1] - curve.gamma[0]
    check(max(abs(x) for row in gap.to_list() for x in row) < 1e-9, "constant curve closes")
    check(abs(curve.s[-1] - length) < 1e-9, "default length is the period")
    rep = curve.verify()
    check(rep["future_directed"] and rep["max_null_defect"] < 1e-6, "verify_null_geometry")

    xi = 1.01
    sol = ad.solve_riccati("mn:7,3", curve, xi, 0.1)
    check(sol.is_pole_free(), "Riccati solution has no poles")
    t = ad.t_transform(curve, sol)
    want = 1.0 / (math.sqrt(2.0) * math.sinh(xi))
    check(abs(t["det_plus"]["mean"] - want) < 1e-8, "det(eta+, eta~+) constant")
    check(abs(t["chi"]["mean"]) < 1e-8, "chi vanishes")
    check(len(t["curve"]) == len(curve), "transformed curve has the same grid")

    cb = ad.constant_bending_transform(curve, k, 2.0, 2.0)
    check(cb["curve"].verify()["max_bending_defect"] < 1e-3, "constant-bending transform")

    x, y, z = ad.torus_embed(curve.gamma[10])
    check(math.hypot(math.hypot(x, y) - 2.0, z) < 1.0, "torus chart lands inside the torus")

    ch = ad.soliton_chain(4, 1, 1.4, 1.0, s=(-3.0, 3.0), t=(-0.05, 0.05))
    check(abs(ch["lambda_p"] - (1.4 + 17.0 / 15.0)) < 1e-12, "soliton chain parameters")
    check(max(ch["closed_form_gaps"]) < 1e-8, "sampled solitons match closed forms")
    w = ad.decay_window(4, 1, 1.4, 1.0, 2.31e-9)
    check(w["max_outside"] <= w["bound"], "decay window of the 1-soliton")

    with tempfile.TemporaryDirectory() as d:
        out = ad.run("frenet", f'[frenet]\nh = 1e-3\nout_dir = "{d}"\n')
        check(all(c["passed"] for c in out["checks"]), "frenet subcommand")
        check(out["report"]["knot_type"] == [2, 5], "frenet reports the knot type")

    try:
        ad.kappa_mn(4, 2)
    except ad.AdsnullError as err:
        check("invalid_mn" in str(err), "errors surface as AdsnullError")
    else:
        raise SystemExit("FAIL: kappa_mn(4, 2) should raise")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
