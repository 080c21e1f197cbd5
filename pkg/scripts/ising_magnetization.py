"""Mean |M|/N against temperature on a periodic lattice.

    python3 scripts/ising_magnetization.py --dims 64x64 --sweeps 2000 --burn-in 1000
"""
import argparse

import numpy as np

from lattice_mc import ising
from lattice_mc.lattice import GridDims


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=GridDims.parse, default=GridDims(64, 64))
    ap.add_argument("--kt", type=float, nargs="+", default=[1.0, 1.5, 2.0, 2.27, 2.5, 3.0, 4.0])
    ap.add_argument("--sweeps", type=int, default=2000)
    ap.add_argument("--burn-in", type=int, default=1000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    args = ap.parse_args()

    print("kT,seed,abs_m_per_site,energy_per_site")
    for kT in args.kt:
        for seed in args.seeds:
            cfg = ising.IsingConfig(args.dims, kT, 0.5, args.sweeps, args.burn_in, seed)
            res = ising.run(cfg)
            n = cfg.dims.sites
            m = np.abs(res.series.magnetization[args.burn_in:]).mean() / n
            print(f"{kT},{seed},{m:.4f},{res.expected_energy / n:.4f}")


if __name__ == "__main__":
    main()
