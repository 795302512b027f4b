"""Detuning scan of source/drain transport through an attractive M=3 chain.

The chain occupation peaks where an N-excitation cluster in the chain is
degenerate with the source Fock state, Delta = U(N-1)/2.
"""

import argparse

import numpy as np

from bhsim.hamiltonian import ChainParams, SourceDrainParams
from bhsim.oracles import multiphoton_resonance_detuning
from bhsim.protocols import run_source_drain


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--U", type=float, default=-10.0)
    ap.add_argument("--step", type=float, default=0.25)
    ap.add_argument("--t-max", type=float, default=1000.0)
    args = ap.parse_args()
    print(f"# two-excitation resonance expected at Delta = "
          f"{multiphoton_resonance_detuning(args.U, 2):g} J")
    print("delta,N_chain_mean,N_chain_max,n_D_max,max_abs_N_chain_minus_2P2")
    for d in np.arange(-10.0, 2.0 + 1e-9, args.step):
        res = run_source_drain(ChainParams.uniform(3, U=args.U),
                               SourceDrainParams.from_detuning(d, 0.1, 4), t_max=args.t_max, dt=0.1)
        nc = res.scalars["N_chain"]
        print(f"{d:.2f},{nc.mean():.5f},{nc.max():.5f},{res.scalars['n_D'].max():.5f},"
              f"{np.max(np.abs(nc - 2 * res.scalars['F_2'])):.5f}", flush=True)


if __name__ == "__main__":
    main()
