"""Fair comparison of fidelity functionals via cross-evaluation.

Each fidelity is optimized on its own, then every fidelity is evaluated on
every optimized dynamics: cell (k, l) holds F_l on the dynamics obtained by
optimizing F_k.  The diagonal repeats each optimizer's own final value.
Uses the QFT target at 20 us; increase the iteration budget for sharper
numbers (the ranking between functionals stabilizes after a few hundred
iterations).
"""

from concurrent.futures import ThreadPoolExecutor

from procopt import (
    FunctionalSpec,
    KrotovConfig,
    TimeGrid,
    chi_from_unitary,
    f_c,
    f_geo,
    f_hs,
    f_nc,
    lambda_model,
    run,
    trajectory_process,
)
from procopt.lambda_system import LambdaParams, TargetGate, guess_field

KINDS = ("fc", "fnc", "fhs", "fgeo")
ITERATIONS = 150

params = LambdaParams()
model = lambda_model(params)
grid = TimeGrid(0.0, 20.0, 1000)
target = chi_from_unitary(TargetGate.qft().matrix, model.basis)
config = KrotovConfig(max_iterations=ITERATIONS, weights={"pump": 0.25, "stokes": 0.25})

def optimize(kind):
    fields = [guess_field("blackman", role, params, grid) for role in ("pump", "stokes")]
    return kind, run(model, grid, FunctionalSpec(kind, target=target), fields, config)

# independent optimizations run concurrently over the immutable model
with ThreadPoolExecutor(max_workers=4) as pool:
    results = dict(pool.map(optimize, KINDS))

evaluate = {"fc": f_c, "fnc": f_nc, "fhs": f_hs, "fgeo": f_geo}
print(f"cross-evaluation, QFT target, t_f = 20 us, {ITERATIONS} iterations")
print("optimized \\ evaluated:  " + "  ".join(f"{l:>6s}" for l in KINDS))
for k in KINDS:
    chi = trajectory_process(model, results[k].final_trajectory)
    cells = []
    for l in KINDS:
        val = results[k].records[-1].f_value if l == k else evaluate[l](chi, target)
        cells.append(f"{val:6.3f}")
    print(f"{k:>22s}:  " + "  ".join(cells))
print("\nfeatures of each optimized dynamics:")
for k in KINDS:
    rec = results[k].records[-1]
    print(f"  {k}: purity {rec.purity:.3f}, coherence {rec.coherence:.3f}")
