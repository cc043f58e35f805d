"""Sweep the initial-signal switch time; check both topology outcomes."""
import sys
import time
import numpy as np
import switchopt as so
from switchopt.signal import initial_signal_paper
from switchopt.solver import SolverConfig, solve
from switchopt.topology import TopologyKind

n_cells = int(sys.argv[1]) if len(sys.argv) > 1 else 64
max_iter = int(sys.argv[2]) if len(sys.argv) > 2 else 60
t50s = [float(v) for v in sys.argv[3:]] or [0.765625, 1.53125]

p = so.paper_example()
g = so.Grid.uniform(2.0, n_cells)
x0 = np.array([0.0, 0.0])

for t50 in t50s:
    s0 = initial_signal_paper(g, t50=t50)
    for topo in (TopologyKind.TERMINAL_STATE, TopologyKind.FULL_TRAJECTORY):
        cfg = SolverConfig(n_cells=n_cells, substeps=2, max_iter=max_iter,
                           topology=topo)
        tic = time.perf_counter()
        res = solve(p, x0, s0, cfg)
        el = time.perf_counter() - tic
        last = res.history[-1]
        xt = last.terminal_state
        stalls = sum(
            1 for r in res.history
            if r.stall_distance is not None and r.stall_distance < cfg.stall_floor
        )
        print(
            f"t50={t50:8.5f} {topo.value:10s} status={res.status.value:10s} "
            f"iters={len(res.history):3d} J={last.cost:8.5f} "
            f"xt=({xt[0]:7.4f},{xt[1]:7.4f}) theta={last.theta:10.2e} "
            f"slowiters={stalls} time={el:5.1f}s"
        )
        # J profile snapshot
        js = [f"{r.cost:.3f}" for r in res.history[:: max(1, len(res.history)//12)]]
        print("    J path:", " ".join(js))
