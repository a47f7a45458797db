#!/usr/bin/env python3
"""Generate the tabulated elastic amplitude CSV (g = f / a0) at a given beam energy.

Amplitudes come from Kirkland's fit of Hartree-Fock electron scattering
factors (Kirkland, Advanced Computing in Electron Microscopy, 2nd ed.,
Appendix C): f(q) = sum_i a_i / (q^2 + b_i) + c_i exp(-d_i q^2) with
q = 2 sin(theta/2) / lambda in 1/Angstrom and f in Angstrom, multiplied
by gamma for the relativistic mass.
"""

import argparse
import math

# Rows: a, b, c, d.
KIRKLAND = {
    "H": [[0.0042029832, 0.0627762505, 0.0300907347], [0.225350888, 0.22536695, 0.225331756],
          [0.0677756695, 0.0035660924, 0.0276135815], [4.38854001, 0.403884823, 1.44490166]],
    "C": [[0.212080767, 0.199811865, 0.168254385], [0.208605417, 0.208610186, 5.57870773],
          [0.14204836, 0.363830672, 0.000835012], [1.33311887, 3.80800263, 0.040398262]],
    "N": [[0.533015554, 0.0529008883, 0.0924159648], [0.290952515, 10.3547896, 10.3540028],
          [0.261799101, 0.0008802621, 0.110166555], [2.76252723, 0.0347681236, 0.993421736]],
    "O": [[0.339969204, 0.307570172, 0.130369072], [0.38157028, 0.381571436, 19.1919745],
          [0.0883326058, 0.1965867, 0.00099622], [0.760635525, 2.07401094, 0.0303266869]],
    "S": [[1.01646916, 0.441766748, 0.121503863], [1.69181965, 0.174180288, 167.011091],
          [0.82796667, 0.0233022533, 1.18302846], [2.3034281, 0.15695415, 5.85782891]],
}
ELEMENTS = ["H", "C", "N", "O", "S"]

REST_KEV = 510.99895
HBAR_C_KEV_NM = 0.1973269804
BOHR_NM = 0.0529177210903


def grid():
    thetas = [i * 1e-4 for i in range(501)]
    thetas += [0.05 + i * 5e-4 for i in range(1, 901)]
    thetas += [0.5 + i * 5e-3 for i in range(1, 529)]
    thetas = [t for t in thetas if t < math.pi]
    thetas.append(math.pi)
    return thetas


def amplitude_nm(element, theta, wavelength_angstrom, gamma):
    a, b, c, d = KIRKLAND[element]
    q = 2.0 * math.sin(theta / 2.0) / wavelength_angstrom
    q2 = q * q
    f = sum(a[i] / (q2 + b[i]) + c[i] * math.exp(-d[i] * q2) for i in range(3))
    return gamma * f * 0.1


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--energy", type=float, default=300.0, help="kinetic energy [keV]")
    parser.add_argument("--out", default="data/elastic_amplitudes_300keV.csv")
    args = parser.parse_args()

    gamma = 1.0 + args.energy / REST_KEV
    pc = math.sqrt(args.energy * (args.energy + 2.0 * REST_KEV))
    wavelength_angstrom = 2.0 * math.pi * HBAR_C_KEV_NM / pc * 10.0

    with open(args.out, "w") as out:
        out.write("theta_rad," + ",".join("g_" + e for e in ELEMENTS) + "\n")
        for theta in grid():
            g = [amplitude_nm(e, theta, wavelength_angstrom, gamma) / BOHR_NM for e in ELEMENTS]
            out.write(f"{theta:.6f}," + ",".join(f"{v:.9e}" for v in g) + "\n")


if __name__ == "__main__":
    main()
