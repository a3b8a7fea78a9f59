"""Desk-scale numerical toolkit for dyadic-annulus multilinear Fourier multipliers.

Subpackages:

* ``field``          -- sampled periodic fields, spectra, exact shifts, norms
* ``calibration``    -- frequency profiles with hard support certificates
* ``lp_ops``         -- shifted square/maximal functions, oscillation and
                        weighted maximal estimators
* ``shifted_lab``    -- growth experiments and the change-of-variables check
* ``multiplier``     -- tensor kernels, the n-linear operator, log-weighted size
* ``exponents``      -- exact rational exponent formulas and planners
* ``counterexample`` -- the sharpness stress construction
* ``cli``            -- reproducible experiment runner
"""

__version__ = "0.1.0"
