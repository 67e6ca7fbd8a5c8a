"""Classical speed limit for tweezer transport.

The deepest slope of a Gaussian tweezer bounds the force it can exert,
so the inertial pseudo-force of an accelerating trap caps the usable
acceleration at a_max = A / (m sigma sqrt(e)).  The cubic ramp's peak
acceleration 6 L / T^2 then gives the minimal duration T_CSL -- a purely
classical number containing no Planck constant.
"""

import numpy as np

import qmoves as qm

for amp in (160.0, 130.0):
    cfg = qm.PhysicsConfig(amp_moving=amp)
    rep = qm.classical_speed_limit(cfg, 1.1)
    print(f"A = {amp:.0f}")
    print(f"  a_max            = {rep.a_max:8.2f}")
    print(f"  omega            = {rep.omega:8.2f}")
    print(f"  T_CSL (exact)    = {rep.t_csl_exact:8.4f}")
    print(f"  T_CSL (harmonic) = {rep.t_csl_harmonic:8.4f}")

print()
print("Both closed forms agree because pi ~ (6 sqrt(e))^(1/2):")
print(f"  pi = {np.pi:.5f}, (6 sqrt(e))^(1/2) = {np.sqrt(6 * np.sqrt(np.e)):.5f}")
