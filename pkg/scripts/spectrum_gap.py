"""Soliton-band gap of an N=4, M=6 chain against U, with the U_C estimate."""

import argparse

import numpy as np

from bhsim.evolution import diagonalize
from bhsim.fock_basis import build_basis
from bhsim.hamiltonian import ChainParams, build_chain_hamiltonian
from bhsim.oracles import u_critical


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=int, default=6)
    ap.add_argument("--N", type=int, default=4)
    ap.add_argument("--step", type=float, default=0.25)
    args = ap.parse_args()
    basis = build_basis(args.M, args.N)
    print(f"# dim={basis.dimension}  U_C estimate = -{u_critical(args.N):.4f} J")
    print("U,gap,band_width")
    for U in np.arange(-4.0, 1e-9, args.step):
        w = diagonalize(build_chain_hamiltonian(basis, ChainParams.uniform(args.M, U=U))).eigenvalues
        print(f"{U:.3f},{w[args.M] - w[args.M - 1]:.6f},{w[args.M - 1] - w[0]:.6f}")


if __name__ == "__main__":
    main()
