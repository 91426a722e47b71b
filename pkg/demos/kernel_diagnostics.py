#!/usr/bin/env python3
"""Projection-kernel diagnostics on the fixed analysis window.

A gaussian probe contracts by roughly 2^-K per scale step (the
approximation order of the family); a same-scale wavelet is
annihilated by the kernel down to quadrature noise.
"""

import numpy as np

from wavefield.diagnostics import (
    KernelProbe,
    commutator_residual,
    gaussian_probe,
    kernel_projection_error,
    partition_check,
    polynomial_probe,
    project,
    wavelet_grid,
)

g = gaussian_probe(12.0, 1.0)

print("# order k  partition     projection    ratio")
for order in (2, 3):
    prev = None
    for k in range(2, 6):
        probe = KernelProbe(order, k, 12)
        part = partition_check(probe)
        err = kernel_projection_error(probe, g)
        tag = "" if prev is None else "  %.4f (2^-K=%.4f)" % (err / prev,
                                                              2.0 ** -order)
        print("K=%d  k=%d  %.2e  %.6e%s" % (order, k, part, err, tag))
        prev = err
    print()

# polynomials below the approximation order pass through the kernel
for deg in (0, 1, 2):
    res = commutator_residual(KernelProbe(3, 0, 12),
                              polynomial_probe(deg), polynomial_probe(1))
    print("poly degree %d commutator residual: %.2e" % (deg, res))

# wavelet annihilation
probe = KernelProbe(3, 2, 12)
w = wavelet_grid(probe, 45)
pw = project(probe, w)
x = probe.grid()
mask = (x >= probe.margin) & (x <= 24.0 - probe.margin)
print("\nwavelet kernel pairing: %.2e"
      % abs(float(w[mask] @ pw[mask]) * probe.spacing))
