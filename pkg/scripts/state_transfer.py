#!/usr/bin/env python3
"""Two qubits with local and collective decay, started in |e,g>.

Prints the no-jump branch (populations and overlap with the antisymmetric
Bell state) and a few stochastic records with their jump channels.
"""

import argparse

import numpy as np

from oqsim.trajectories import TrajectoryConfig, state_transfer_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma1", type=float, default=0.1)
    ap.add_argument("--gamma2", type=float, default=0.1)
    ap.add_argument("--gamma-c", type=float, default=1.0)
    ap.add_argument("--t-max", type=float, default=10.0)
    ap.add_argument("--records", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    cfg = TrajectoryConfig(dt=1e-3, t_max=a.t_max, seed=a.seed, conditional_no_jump=True, sample_every=500)
    res = state_transfer_scenario(a.gamma1, a.gamma2, a.gamma_c, cfg)
    print(f"{'t':>6} {'n1':>8} {'n2':>8} {'F(psi-)':>8}")
    for t, (n1, n2, f) in zip(res.times, res.expect.real):
        print(f"{t:6.2f} {n1:8.4f} {n2:8.4f} {f:8.4f}")

    names = ("qubit 1", "qubit 2", "collective")
    for k in range(a.records):
        cfg = TrajectoryConfig(dt=1e-3, t_max=a.t_max, seed=a.seed, sample_every=500)
        r = state_transfer_scenario(a.gamma1, a.gamma2, a.gamma_c, cfg, index=k)
        jumps = ", ".join(f"{names[c]} at t={t:.3f}" for t, c in r.jumps) or "none"
        print(f"record {k}: jumps: {jumps}; final F(psi-)={np.real(r.expect[-1, 2]):.3f}")


if __name__ == "__main__":
    main()
