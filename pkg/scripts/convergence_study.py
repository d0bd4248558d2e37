"""Truncation study at one parameter point.

Prints how the static spectrum moves with ``n_fock`` and how quasienergies,
edge weights and the pointwise Floquet-mode norm defect move with ``l_max``.
"""

from __future__ import annotations

import argparse

import numpy as np

from floquet_rabi.floquet import set_distance, solve
from floquet_rabi.hamiltonian import ModelParams, static_hamiltonian


def mode_norm_defect(sol, samples: int = 64) -> float:
    ts = np.linspace(0, sol.period, samples, endpoint=False)
    return float(max(np.max(np.abs(np.linalg.norm(sol.modes_at([t])[0], axis=0) - 1)) for t in ts))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta0", type=float, default=0.0)
    ap.add_argument("--eta-m", type=float, default=0.5)
    ap.add_argument("--omega-m", type=float, default=0.5)
    ap.add_argument("--n-fock", type=int, nargs="+", default=[30, 40, 60])
    ap.add_argument("--l-max", type=int, nargs="+", default=[20, 24, 28, 32, 36])
    args = ap.parse_args()
    base = ModelParams(eta0=args.eta0, eta_m=args.eta_m, omega_m=args.omega_m)

    print("n_fock  max |dE| vs largest (lowest n_j static energies)")
    ref = np.linalg.eigvalsh(static_hamiltonian(base.replace(n_fock=max(args.n_fock))))[: base.n_j]
    for n in args.n_fock:
        e = np.linalg.eigvalsh(static_hamiltonian(base.replace(n_fock=n)))[: base.n_j]
        print(f"{n:6d}  {np.max(np.abs(e - ref)):.3e}")

    print("\nl_max  d(eps) vs largest  max edge weight  mode norm defect")
    ref = solve(base.replace(l_max=max(args.l_max)))
    for L in args.l_max:
        sol = solve(base.replace(l_max=L), edge_tol=np.inf)
        d = set_distance(sol.quasienergies, ref.quasienergies, base.omega_m)
        print(f"{L:5d}  {d:.3e}          {sol.edge_weights.max():.3e}        {mode_norm_defect(sol):.3e}")


if __name__ == "__main__":
    main()
