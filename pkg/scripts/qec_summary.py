#!/usr/bin/env python3
"""Coherence times, the two-qubit logical subsystem and the repetition-code table."""

import argparse

import numpy as np

from oqsim.qec import (
    cycle_map, logical_error_ratio, logical_flip_probability, single_qubit_coherence, two_qubit_logical_demo,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--taus", type=float, nargs="*", default=[0.005, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2])
    a = ap.parse_args()

    for g1, gphi in [(a.gamma, 0.0), (a.gamma, 0.5 * a.gamma), (0.0, a.gamma)]:
        rep = single_qubit_coherence(g1, gphi)
        print(f"gamma1={g1:g} gamma_phi={gphi:g}: T1={rep.T1:.4g} T2={rep.T2:.4g}")

    demo = two_qubit_logical_demo(a.gamma, 10 * a.gamma)
    print(f"two qubits: spectrum dev {demo.minkowski_max_dev:.1e}, reduced-state dev {demo.reduced_max_dev:.1e}")

    print(f"\n{'tau':>8} {'lambda_L':>12} {'oracle':>12} {'bare':>6} {'ratio':>8}")
    for row in logical_error_ratio(a.gamma, a.taus):
        oracle = -np.log(1 - 2 * logical_flip_probability(a.gamma, row.tau)) / row.tau
        print(f"{row.tau:8.4g} {row.lambda_eff_logical:12.6g} {oracle:12.6g} {row.bare_rate:6.3g} {row.ratio:8.4f}")

    cm = cycle_map(a.gamma, a.taus[len(a.taus) // 2])
    slow = np.sort(np.abs(cm.lambda_eff))[:6]
    print(f"\nslowest |lambda_eff| at tau={cm.tau:g}: {np.round(slow, 6).tolist()}")


if __name__ == "__main__":
    main()
