"""Feature-based control: maximize purity (or coherence) instead of a fidelity.

No target gate enters here; the objective rewards any dynamics with the
desired feature.  Purity measures how unitary the realized channel is,
coherence the offdiagonal weight of its Choi state in the logical basis.
"""

from procopt import FunctionalSpec, KrotovConfig, TimeGrid, lambda_model, run
from procopt.lambda_system import LambdaParams, guess_field

params = LambdaParams()
model = lambda_model(params)
grid = TimeGrid(0.0, 20.0, 1000)

def optimize_feature(kind, weight, iterations):
    fields = [guess_field("blackman", role, params, grid) for role in ("pump", "stokes")]
    spec = FunctionalSpec(kind)
    config = KrotovConfig(max_iterations=iterations,
                          weights={"pump": weight, "stokes": weight})
    result = run(model, grid, spec, fields, config)
    return result

print("purity optimization (second-order Krotov, sigma from iteration data):")
res_p = optimize_feature("purity", 0.25, 200)
for rec in res_p.records[::40]:
    print(f"  n={rec.n:3d}  purity={rec.purity:.4f}  J={rec.j_total:+.5f}")
print(f"  final purity {res_p.records[-1].purity:.4f} "
      f"(guess field value was {res_p.records[0].purity:.4f})")

print("\ncoherence optimization (smoothed-modulus gradient):")
res_c = optimize_feature("coherence", 0.05, 200)
for rec in res_c.records[::40]:
    print(f"  n={rec.n:3d}  coherence={rec.coherence:.4f}  J={rec.j_total:+.5f}")
print(f"  final coherence {res_c.records[-1].coherence:.4f} "
      f"(guess field value was {res_c.records[0].coherence:.4f})")
