"""Linear convergence on a strongly convex problem with the geometric schedule.

Both ``f`` (an average of diagonal quadratics) and ``g = 1/2 ||y - e||^2``
are strongly convex, so the saddle point is known in closed form. With the
inner-loop length growing geometrically the iterate error decays linearly;
the script prints it alongside a fitted rate.
"""

import numpy as np
import scipy.sparse as sp

from asadmm.linalg import power_iteration_norm
from asadmm.problem import ProblemSpec
from asadmm.sampler import SamplerConfig
from asadmm.solver import ASADMM, AdaptiveProxConfig, ScheduleConfig, SolverConfig

rng = np.random.default_rng(0)
n, N = 10, 20
D = rng.uniform(1.0, 2.0, (N, n))
C = 0.1 * rng.normal(size=(N, n))
A = rng.normal(size=(n, n)) / np.sqrt(n)
b, e = 0.1 * rng.normal(size=(2, n))
p = ProblemSpec(A=A, B=-sp.identity(n), b=b, N=N,
                component_grad=lambda j, x: D[j] * (x - C[j]),
                f_value=lambda x: 0.5 * float(np.mean(np.sum(D * (x - C) ** 2, axis=1))),
                g_value=lambda y: 0.5 * float(np.sum((y - e) ** 2)),
                g_prox=lambda tau, q: (e + tau * q) / (1.0 + tau), lipschitz_nu=2.0)
x_star = np.linalg.solve(np.diag(D.mean(0)) + A.T @ A, (D * C).mean(0) + A.T @ (b + e))
y_star = A @ x_star - b
w_star = np.concatenate([x_star, y_star, e - y_star])

cfg = SolverConfig(beta=1.0, s=1.0, sigma=1.0, max_outer=40, record_wall_time=False,
                   schedule=ScheduleConfig(kind="geometric", M_floor=1, theta=0.1),
                   adaptive_prox=AdaptiveProxConfig(enabled=False,
                                                    rho0=1.01 * power_iteration_norm(p.A)))
run = ASADMM(p, cfg, SamplerConfig(mode="plain", rng_seed=0))
errs = []
for _ in range(40):
    run.step()
    st = run.state
    errs.append(np.linalg.norm(np.concatenate([st.x, st.y, st.lam]) - w_star))
k = np.arange(1, 41)
slope = np.polyfit(k[4:], np.log(errs[4:]), 1)[0]
for i in range(0, 40, 5):
    print(f"k={k[i]:2d}  M_k={run.history['M'][i]:5d}  error={errs[i]:.3e}")
print(f"fitted contraction per iteration: {np.exp(slope):.3f}")
