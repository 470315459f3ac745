"""Static torque quasi-reflection in a contact scenario.

The operator pulls the master toward a target behind a joint-space wall at
the slave.  As the pair comes to rest the operator torque settles to a
fixed diagonal scaling of the environment torque, set by the (hidden)
integral gains of the two inner loops: here KI1/KI2 = 0.5.

The second panel shows the display trick used when no torque sensor is
available: a scaled inner-loop integral reproduces the environment torque.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from telesim.analysis import reflection_ratio
from telesim.cli import parse_config
from telesim.sim import run_scenario

trace = run_scenario(parse_config("configs/reflect_kinematic.json"))
t = trace.t
tau1 = trace.vec("tau1_star")
tau2 = trace.vec("tau2_star")

est = reflection_ratio(trace, window_fraction=0.2)
print(f"measured tau1*/tau2* over the last 20%: {np.round(est.ratio, 4)}")
print(f"theoretical KI1/KI2:                    {est.theoretical}")

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
for j in range(2):
    ax1.plot(t, tau1[:, j], label=f"operator torque, joint {j + 1}")
    ax1.plot(t, 0.5 * tau2[:, j], "--",
             label=f"0.5 x environment torque, joint {j + 1}")
ax1.set_ylabel("torque (N m)")
ax1.set_title("operator torque converges to KI1/KI2 of the contact torque")
ax1.legend(fontsize=8)

# reflected-torque display: the slave's integral term is the only place
# the contact torque shows up once everything is at rest
ki2 = np.asarray(trace.meta["slave"]["inner_gains"]["ki"])
psi2 = trace.vec("q2") - trace.vec("qc2")
dt = t[1] - t[0]
integral = np.zeros_like(psi2)
integral[1:] = np.cumsum(0.5 * dt * (psi2[1:] + psi2[:-1]), axis=0)
for j in range(2):
    ax2.plot(t, tau2[:, j], label=f"tau2*, joint {j + 1}")
    ax2.plot(t, -ki2[j] * integral[:, j], "--",
             label=f"-KI2 int(q2 - qc2), joint {j + 1}")
ax2.set_xlabel("t (s)")
ax2.set_ylabel("torque (N m)")
ax2.legend(fontsize=8)

fig.tight_layout()
fig.savefig("demos/03_contact_reflection.png", dpi=120)
print("wrote demos/03_contact_reflection.png")
