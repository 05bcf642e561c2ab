"""Regenerate the STO-3G FCIDUMP fixtures (RHF canonical orbitals).

Usage: python3 data/generate_fixtures.py [outdir]
"""
import math
import sys

from pyscf import gto, scf
from pyscf.tools import fcidump


def nh3_geometry(r=1.0, angle_deg=107.0):
    cos_g = math.cos(math.radians(angle_deg))
    # cos(HNH) = cos^2(b) - 0.5 sin^2(b) for three H at polar angle b
    cos2_b = (2.0 * cos_g + 1.0) / 3.0
    cb = math.sqrt(cos2_b)
    sb = math.sqrt(1.0 - cos2_b)
    atoms = [("N", (0.0, 0.0, 0.0))]
    for k in range(3):
        phi = 2.0 * math.pi * k / 3.0
        atoms.append(("H", (r * sb * math.cos(phi), r * sb * math.sin(phi), -r * cb)))
    return atoms


def h2o_geometry(r=1.0, angle_deg=107.6):
    half = math.radians(angle_deg) / 2.0
    return [
        ("O", (0.0, 0.0, 0.0)),
        ("H", (r * math.sin(half), 0.0, r * math.cos(half))),
        ("H", (-r * math.sin(half), 0.0, r * math.cos(half))),
    ]


MOLECULES = {
    "h2": [("H", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, 1.0))],
    "lih": [("Li", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, 1.0))],
    "beh2": [("Be", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, 1.0)), ("H", (0.0, 0.0, -1.0))],
    "h2o": h2o_geometry(),
    "nh3": nh3_geometry(),
}


def main():
    outdir = sys.argv[1] if len(sys.argv) > 1 else "data"
    for name, atoms in MOLECULES.items():
        mol = gto.M(atom=atoms, basis="sto-3g", unit="Angstrom", symmetry=False, verbose=0)
        mf = scf.RHF(mol)
        mf.conv_tol = 1e-12
        mf.kernel()
        fcidump.from_scf(mf, f"{outdir}/{name}.fcidump", tol=1e-15)
        print(name, mol.nao, mol.nelectron, mf.e_tot)


if __name__ == "__main__":
    main()
