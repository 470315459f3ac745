"""The three stability checkers, narrated.

1. Exponential stability of the command-generator dynamics (a per-joint
   cubic, checked by Routh-Hurwitz).
2. The (gamma, gamma_star) conditions against the inner-loop gain ratios.
3. The point-mass PID rule of thumb that motivates both: kD*kP > m*kI.
"""

import numpy as np

from telesim.analysis import (check_cubic_stability, check_gain_condition,
                              check_point_mass_pid, format_stability_report)
from telesim.dynamics import ArmModel, mass_matrix

print("-- command-generator cubic: s^3 + 15 s^2 + 75 s + 125 --")
rep = check_cubic_stability([15, 15], [75, 75], [125, 125])
print(format_stability_report("stock (15, 75, 125)", rep))
print(format_stability_report("degenerate (1, 1, 10)",
                              check_cubic_stability([1], [1], [10])))

print()
print("-- gain conditions for the adaptive controller --")
rep = check_gain_condition(KD=[2, 2], KP=[20, 20], KI=[1, 1],
                           gamma=30.0, gamma_star=30.0, epsilon=1e-3)
print(format_stability_report("stock inner gains, gamma = gamma* = 30", rep))
rep = check_gain_condition(KD=[2, 2], KP=[20, 20], KI=[1, 1],
                           gamma=1.0, gamma_star=0.4, epsilon=0.1)
print(format_stability_report("gamma* below KI/KD", rep))

print()
print("-- point-mass PID rule per joint (m* = rest inertia) --")
model = ArmModel.canonical()
m_eff = np.diag(mass_matrix(model, np.zeros(2)))
for k, m in enumerate(m_eff):
    rep = check_point_mass_pid(m, 2.0, 20.0, 1.0)
    print(format_stability_report(f"joint {k + 1} (m* = {m:.3f})", rep))
