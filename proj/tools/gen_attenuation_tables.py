#!/usr/bin/env python3
"""Write approximate linear attenuation tables for the bundled materials.

Mass coefficients follow power laws anchored at 20 keV (photoelectric with
K-edge jumps, coherent), and a Klein-Nishina total with a low-energy binding
roll-off (incoherent). Replace the output with tabulated data for real work.
"""

import argparse
import csv
import math
import pathlib

R_E2_CM2 = 7.9407877e-26  # classical electron radius squared
N_A = 6.02214076e23
ME_C2 = 511.0

# Z, A, mass coefficients at 20 keV [cm^2/g] (pe, coh), K edge [keV], jump ratio
ELEMENTS = {
    "H": (1, 1.008, 1.1e-4, 8.0e-4, None, 1.0),
    "C": (6, 12.011, 0.222, 0.0654, 0.284, 20.0),
    "O": (8, 15.999, 0.565, 0.111, 0.543, 15.0),
    "Na": (11, 22.990, 2.65, 0.190, 1.072, 12.0),
    "Cl": (17, 35.45, 8.80, 0.370, 2.822, 9.5),
}

# mass fractions, density [g/cm^3]
MATERIALS = {
    "NaCl": ({"Na": 0.3934, "Cl": 0.6066}, 2.165),
    "graphite": ({"C": 1.0}, 2.26),
    "diamond": ({"C": 1.0}, 3.51),
    "cellulose": ({"C": 0.4445, "H": 0.0622, "O": 0.4933}, 1.50),
}


def kn_total(energy):
    k = energy / ME_C2
    a = (1 + k) / k**2 * (2 * (1 + k) / (1 + 2 * k) - math.log(1 + 2 * k) / k)
    b = math.log(1 + 2 * k) / (2 * k) - (1 + 3 * k) / (1 + 2 * k) ** 2
    return 2 * math.pi * (a + b)  # units of r_e^2


def element_mass_coefficients(symbol, energy):
    z, a, pe20, coh20, edge, jump = ELEMENTS[symbol]
    pe = pe20 * (20.0 / energy) ** 2.85
    if edge is not None and energy < edge:
        pe /= jump
    coh = coh20 * (20.0 / energy) ** 1.7
    binding = 1.0 - math.exp(-energy / (1.0 + 0.35 * z))
    inc = kn_total(energy) * R_E2_CM2 * N_A * z / a * binding
    return pe, inc, coh


def energies():
    grid = [round(0.5 + 0.25 * k, 4) for k in range(0, 238)]  # 0.5 .. 59.75 keV
    edges = [v[4] for v in ELEMENTS.values() if v[4] is not None and v[4] > grid[0]]
    for e in edges:
        grid += [e - 1e-4, e]
    return sorted(set(grid))


def write_table(path, composition, density):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["E_keV", "mu_pe_per_mm", "mu_inc_per_mm", "mu_coh_per_mm"])
        for e in energies():
            pe = inc = coh = 0.0
            for sym, w in composition.items():
                p, i, c = element_mass_coefficients(sym, e)
                pe += w * p
                inc += w * i
                coh += w * c
            # cm^2/g * g/cm^3 = 1/cm -> 1/mm
            out.writerow([f"{e:.4f}", f"{pe * density / 10:.6e}", f"{inc * density / 10:.6e}",
                          f"{coh * density / 10:.6e}"])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", type=pathlib.Path)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, (composition, density) in MATERIALS.items():
        write_table(args.out_dir / f"{name}.atten.csv", composition, density)


if __name__ == "__main__":
    main()
