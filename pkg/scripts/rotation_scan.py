"""Violation of the rotated inequality when Bob's lab angles drift from the design.

Writes one (angle, Q/B) CSV per axis and a (phi, theta, T/B) surface for a few
fixed psi values.
"""

import argparse
from pathlib import Path

import numpy as np

from belltwist.catalog import rotation_scan, scan_surface


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--design", type=float, nargs=3, default=(0.6, 1.2, 2.0), metavar=("PHI", "THETA", "PSI"))
    p.add_argument("--steps", type=int, default=720)
    p.add_argument("--surface-steps", type=int, default=60)
    p.add_argument("--outdir", type=Path, default=Path("out/rotation"))
    args = p.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    for axis in ("phi", "theta", "psi"):
        rows = rotation_scan(args.design, axis, args.steps)
        np.savetxt(args.outdir / f"scan_{axis}.csv", rows, delimiter=",", fmt="%.17g")
        peak = rows[np.argmax(rows[:, 1])]
        print(f"{axis:5s} peak Q/B = {peak[1]:.6f} at {peak[0]:.4f} rad")

    for psi in (0.0, np.pi / 4, np.pi / 2):
        surf = scan_surface(psi, args.surface_steps)
        np.savetxt(args.outdir / f"surface_psi{psi:.3f}.csv", surf, delimiter=",", fmt="%.17g")
        print(f"psi = {psi:.3f}: T/B ranges over [{surf[:, 2].min():.4f}, {surf[:, 2].max():.4f}]")


if __name__ == "__main__":
    main()
