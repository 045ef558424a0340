"""Reference values computed once with sympy at 20 digits (see test_oracles.py)."""

import math

P = (0.7, 1.3)            # generic probe for the radial family
TRIG_Q = (1.4, 2.0)       # generic probe for the trig family
HALF_PI = (math.pi / 2, math.pi / 2)

# radial shift, C1 = 3/2, C2 = 1
U_RADIAL_R1 = -4.5
Y1_AT_11 = -2.7163883751087756725
Y1_AT_P = -2.1360879050559262805
Y2_AT_P = -1.4084096077291821630
Y_CONST_COEF_AT_P = 1.1488257162998913295  # coefficient of the additive constant in Y~
U_RADIAL_AT_P = -1.4932653765583680870
U_RADIAL_2_M1_AT_P = 4.9543674914131777607
U_RADIAL_HALF_1_AT_P = -0.22086723283817353380

# twofold step
U2_R1_C0 = -0.3528
U2_R1_C1 = -0.99704142011834319527
U2_AT_P_C1 = -1.2128976012930174252
Y2_AT_11_C0 = -0.59598978273324100257
Q12_AT_P_C0 = 3.9582286983223671628

# trig family, p = 1, x0 = 0
YP_HALF_PI_C2 = 2.1806628214547364601
U_SHIFT_HALF_PI = 1.3776451704374659124
U_SHIFT_AT_Q = 1.9704174579679311348
U_FINAL_AT_Q_C25 = -0.53034894913409475338
YP_AT_Q_C25 = 3.6442632217148372257
