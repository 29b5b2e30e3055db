"""Convolution powers of probability measures on the integers.

Modules:

* :mod:`rittlab.lattice`: finitely supported signed measures, convolution
  with tail accounting, power sweeps and kernel-norm (Ritt) sweeps;
* :mod:`rittlab.families`: completely monotone families built from their
  representative measures, and the explicit examples;
* :mod:`rittlab.spectral`: transforms and their derivatives, angular ratios,
  gauge-function domination checks and the half-plane sector check;
* :mod:`rittlab.monotone_char`: complete monotonicity and the coefficient and
  integral forms of the angular-ratio criteria;
* :mod:`rittlab.maximal`: maximal and square functions over powers, weak-type
  constants and the spatial regularity check;
* :mod:`rittlab.cli`: the config-driven command line.
"""

__version__ = "0.1.0"
