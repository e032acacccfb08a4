"""
Mutual information of a layered PAM input
=========================================

A two-user broadcast input is a joint table ``P_UX``: row ``u`` is the cloud
picked by the common message, column ``x`` the transmitted symbol. Here we
evaluate the three informations that drive the rates with Gauss-Hermite
quadrature, and check them against a Monte Carlo estimate.
"""

import numpy as np

from bcshaping import JointDistribution, channel_from_snr, standard_pam
from bcshaping.mutual_info import mi_u_y, mi_x_y, mi_x_y_given_u
from bcshaping.oracle import mc_mutual_info

# unit-power 4-PAM, split into two clouds of two neighbouring symbols
constellation, _ = standard_pam(4)
joint = JointDistribution(np.array([[0.25, 0.25, 0.0, 0.0],
                                    [0.0, 0.0, 0.25, 0.25]]))
channel = channel_from_snr(10.0, 8.0)
print("symbols:", np.round(constellation.symbols, 4))

# strong user decodes both layers, weak user only the cloud index
r1 = mi_x_y_given_u(joint, constellation, channel.sigma1_sq)
r2 = mi_u_y(joint, constellation, channel.sigma2_sq)
print(f"R1 = I(X;Y1|U) = {r1:.4f} bits, R2 = I(U;Y2) = {r2:.4f} bits")

# the chain rule ties them to the point-to-point rate at the weak receiver
q = joint.probs.sum(axis=0)
total2 = mi_x_y(constellation, q, channel.sigma2_sq)
print(f"I(X;Y2) = {total2:.4f} = I(U;Y2) + I(X;Y2|U) = "
      f"{r2 + mi_x_y_given_u(joint, constellation, channel.sigma2_sq):.4f}")

# independent check by sampling
for kind, value, sigma_sq in (("X;Y|U", r1, channel.sigma1_sq), ("U;Y", r2, channel.sigma2_sq)):
    est = mc_mutual_info(joint, constellation, sigma_sq, kind, samples=200_000, seed=1)
    print(f"I({kind}): quadrature {value:.5f}, Monte Carlo {est.value:.5f} +- {est.std_error:.5f}")
