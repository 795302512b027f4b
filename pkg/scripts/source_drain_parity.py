"""Odd/even chain source-to-drain transport compared with the reduced models."""

import argparse

import numpy as np

from bhsim.hamiltonian import ChainParams, SourceDrainParams
from bhsim.observables import first_revival_time
from bhsim.oracles import off_resonant_sd, parity_crossover, resonant_sd_densities
from bhsim.protocols import run_source_drain


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--Jprime", type=float, default=0.1)
    ap.add_argument("--N-total", type=int, default=4)
    ap.add_argument("--M", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    args = ap.parse_args()
    sd = SourceDrainParams.from_detuning(0.0, args.Jprime, args.N_total)
    print("M,parity,crossover,check,value,reference")
    for M in args.M:
        cross = parity_crossover(M, args.Jprime)
        if M % 2:
            res = run_source_drain(ChainParams.uniform(M), sd, t_max=120.0, dt=0.05)
            n_s, _, _ = resonant_sd_densities(M, args.Jprime, args.N_total, res.times)
            dev = np.max(np.abs(res.scalars["n_S"] - n_s)) / args.N_total
            print(f"{M},odd,{cross:.3f},max|n_S-model|/N,{dev:.4f},0")
        else:
            red = off_resonant_sd(M, args.Jprime)
            t_max = 1.6 * np.pi / red.omega_minus_corrected
            res = run_source_drain(ChainParams.uniform(M), sd, t_max=t_max, dt=0.05)
            t_rev = first_revival_time(res.times, res.scalars["n_S"], 2 * np.pi / red.omega_plus)
            print(f"{M},even,{cross:.3f},pi/t_revival,{np.pi / t_rev:.6f},"
                  f"{red.omega_minus_corrected:.6f}")


if __name__ == "__main__":
    main()
