"""Fine t50 sweep with per-iteration stall-distance logging."""
import sys
import time
import numpy as np
import switchopt as so
from switchopt.signal import initial_signal_paper
from switchopt.solver import SolverConfig, solve
from switchopt.topology import TopologyKind

n_cells = int(sys.argv[1])
max_iter = int(sys.argv[2])
t50s = [float(v) for v in sys.argv[3:]]

p = so.paper_example()
g = so.Grid.uniform(2.0, n_cells)
x0 = np.array([0.0, 0.0])

for t50 in t50s:
    s0 = initial_signal_paper(g, t50=t50)
    for topo in (TopologyKind.TERMINAL_STATE, TopologyKind.FULL_TRAJECTORY):
        cfg = SolverConfig(n_cells=n_cells, substeps=2, max_iter=max_iter,
                           topology=topo)
        tic = time.perf_counter()
        try:
            res = solve(p, x0, s0, cfg)
        except Exception as e:
            print(f"t50={t50:8.5f} {topo.value:10s} ERROR {e}")
            continue
        el = time.perf_counter() - tic
        last = res.history[-1]
        xt = last.terminal_state
        print(
            f"t50={t50:8.5f} {topo.value:10s} status={res.status.value:10s} "
            f"iters={len(res.history):3d} J={last.cost:8.5f} "
            f"xt=({xt[0]:7.4f},{xt[1]:7.4f}) theta={last.theta:10.2e} t={el:5.1f}s"
        )
        if topo is TopologyKind.FULL_TRAJECTORY:
            rows = [
                f"({r.iteration}:J{r.cost:.3f},d{r.stall_distance:.1e})"
                for r in res.history
                if r.stall_distance is not None
            ]
            print("   ", " ".join(rows[:30]))
