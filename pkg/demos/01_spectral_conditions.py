"""Declare spectral measures and check the admissibility conditions.

A stationary Gaussian field is described by its spectral measure; the
intensity theory needs four things from it: finite fourth moment, no
atoms, support off every hyperplane, and a sign-changing barrier
transform. This script walks the built-in measures through all four.
"""

import numpy as np

from nodal import (AtomSet, CubeLebesgue, GaussianDensity, SphereSurface,
                   check_rho1, check_rho2, check_rho3, check_rho4)

MEASURES = {
    "unit circle (plane waves)": SphereSurface(1.0, 2),
    "cube Lebesgue (sinc^2)": CubeLebesgue(1.0, 2),
    "Gaussian density (Bargmann-Fock)": GaussianDensity(1.0 / (2 * np.pi), 2),
    "atom pair on the x-axis": AtomSet([[1.0, 0.0], [-1.0, 0.0]],
                                       [0.5, 0.5]),
}


def main():
    for name, rho in MEASURES.items():
        print(f"\n=== {name} ===")
        m4 = check_rho1(rho)
        print(f"  fourth moment          : {m4:.6g}  "
              f"({'finite' if np.isfinite(m4) else 'divergent'})")
        atoms = check_rho2(rho)
        print(f"  atoms                  : "
              f"{'yes, ' + str(len(atoms.atoms)) if atoms.has_atoms else 'none'}")
        mm = check_rho3(rho)
        print(f"  second-moment matrix   : {np.round(mm.entries, 4).tolist()}")
        print(f"  min eigenvalue         : {mm.min_eigenvalue:.4g}  "
              f"({'pass' if mm.passed else 'FAIL: hyperplane support'})")
        cert = check_rho4(rho)
        print(f"  barrier certificate    : {cert.verdict}")
        if cert.satisfied:
            print(f"  certificate margin     : {cert.margin:.4g}")


if __name__ == "__main__":
    main()
