"""Why partial mitigation can pull the optimizer out of a noise-made minimum.

On ring_6 with p = 3 the noisy landscape has a local optimum (N_cut about 5.26)
that beats the true optimum (N_cut 6) once noise is applied. Walking the line
between the two points shows the ranking flip as more of the inverse map is
applied; m = 0.5 is already enough. All values are exact, no sampling.
"""
from ipec.mitigation import exact_signed_estimate
from ipec.noise import error_probability_model
from ipec.qaoa import QaoaProblem, landscape_line_scan, make_graph, n_cut

problem = QaoaProblem(make_graph("ring_6"), p=3)
noise = error_probability_model(0.02)
local = [0.189, 0.269, 0.868, 0.64, 1.618, 0.226]
better = [0.5, 0.243, 0.51, 0.493, 1.754, 0.504]
print(f"ideal N_cut: local {n_cut(problem, local):.3f}, better {n_cut(problem, better):.3f}")

for m in (0.0, 0.5, 1.0):
    line = landscape_line_scan(problem, local, better, 11, lambda x: -exact_signed_estimate(problem, x, noise, m))
    values = [v for _, v in line]
    winner = "local" if values[-1] > values[0] else "better"
    print(f"m = {m:.1f}: " + " ".join(f"{v:.2f}" for v in reversed(values)) + f"   -> favours {winner}")
