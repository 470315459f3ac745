"""Bilateral teleoperation simulator for closed-architecture robots.

Subpackages:

- dynamics: two-link arm rigid-body terms, regressor, kinematics
- closed_robot: plant + hidden inner PD/PID loop emulation
- channel: bounded time-varying delay profiles and delay lines
- control: kinematic, dynamic-separation, adaptive and open-torque controllers
- analysis: stability-condition checkers and trace-level claim verifiers
- sim: scenario orchestration producing deterministic traces
- cli: run / check-gains / analyze / probe-manipulability / serve front end
- bridge: websocket telemetry + operator-input service for the live cockpit
"""

from telesim.dynamics import ArmModel, DynParams
from telesim.sim import Scenario, Trace, run_scenario, scenario_from_dict

__all__ = ["ArmModel", "DynParams", "Scenario", "Trace", "run_scenario",
           "scenario_from_dict"]
__version__ = "0.1.0"
