"""Physical constants and material data.

The fused-silica dispersion is Malitson's three-term Sellmeier fit
(I. H. Malitson, J. Opt. Soc. Am. 55, 1205 (1965)), with wavelengths in
micrometres.
"""
from scipy import constants as _const

C = _const.c
HBAR = _const.hbar
EPS0 = _const.epsilon_0

# Malitson fused silica: n^2 - 1 = sum B_j x^2 / (x^2 - C_j^2), x in um
SELLMEIER_B = (0.6961663, 0.4079426, 0.8974794)
SELLMEIER_C = (0.0684043, 0.1162414, 9.896161)
SELLMEIER_WINDOW_M = (0.21e-6, 6.7e-6)

AIR_INDEX = 1.0

# Kerr index of fused silica; only used by the gamma-from-effective-area helper
SILICA_N2_M2_PER_W = 2.6e-20

# first zero of J0
J0_FIRST_ZERO = 2.404825557695773
