"""Smoke test for the splitting_hmc_py extension module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/splitting_hmc-*.whl
"""

import math
import random

import splitting_hmc_py as sh


def check(cond, msg):
    if not cond:
        raise SystemExit("FAIL: " + msg)
    print("ok  " + msg)


bcss2 = sh.Scheme.named("BCSS2")
check(abs(bcss2.stability_limit() - 2.634) < 1e-3, "BCSS2 stability limit %.4f" % bcss2.stability_limit())
A, B, C, D = bcss2.propagator(1.3)
check(abs(A * D - B * C - 1.0) < 1e-12, "propagator is symplectic")
check(abs(sh.rho(2, 2.0, 0.25) - 1.0 / 24.0) < 1e-14, "rho_2(2, 1/4) = 1/24")
vv = sh.Scheme.named("VV")
check(abs(vv.expected_energy_error(1.0, 1) - 1.0 / 32.0) < 1e-14, "VV energy error at h = 1")

t3 = sh.BOptTable(3, 400)
b, a, clamped = t3.lookup(3.0)
check(abs(b - 0.118880) < 1e-3 and not clamped, "3-stage table at h = 3: b = %.6f, a = %.6f" % (b, a))
check(t3.lookup(100.0)[2], "lookup beyond the table is clamped")

f = sh.fitting_factors(0.9, 0.05, 10, 3.0, omegas=[0.5 + 0.25 * i for i in range(10)])
check(f["S"] >= 1.0 and f["S_omega"] >= 1.0, "fitting factors S = %.3f, S_omega = %.3f" % (f["S"], f["S_omega"]))

model = sh.Model.gaussian_diagonal([1.0, 4.0, 9.0], mean=[1.0, 0.0, -1.0])
check(model.dim == 3 and model.gradient([1.0, 0.0, -1.0]) == [0.0, 0.0, 0.0], "Gaussian gradient vanishes at the mean")
theta, p, dh = sh.Scheme.named("BCSS3").integrate(model, [0.5, 0.5, 0.5], [1.0, 0.0, 0.0], 0.2, 10)
check(abs(dh) < 0.1, "BCSS3 leg energy error %.2e" % dh)

res = sh.run_pipeline(model, "sAIA3", start=[0.0, 0.0, 0.0], seed=3,
                      config={"n_tune": 3000, "n_burnin": 1000, "n_pr": 3000})
n = len(res["accepted"])
means = [sum(res["samples"][i * 3 + j] for i in range(n)) / n for j in range(3)]
se = res["mcse"]
check(all(abs(m - mu) < 4 * s for m, mu, s in zip(means, [1.0, 0.0, -1.0], se)),
      "sAIA3 means %s within 4 MCSE" % ["%.3f" % m for m in means])
check(res["max_psrf"] < 1.05 and 0.0 < res["ar"] <= 1.0, "AR %.3f, split PSRF %.4f" % (res["ar"], res["max_psrf"]))

rng = random.Random(1)
x = [rng.gauss(0, 1) for _ in range(4000)]
check(abs(sh.ess(x)[0] / 4000 - 1) < 0.15, "ESS of iid draws")
check(abs(sh.psrf([x, x])[0] - 1.0) < 1e-10, "PSRF of identical chains")
m = sh.mcse(x)[0]
check(abs(m - 1 / math.sqrt(4000)) < 0.004, "MCSE of iid draws %.4f" % m)
print("all checks passed")
