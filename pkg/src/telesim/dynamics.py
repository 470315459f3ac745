"""Rigid-body dynamics of a planar two-link manipulator.

Closed-form inertia, Coriolis (Christoffel construction), gravity, the
linear-in-parameters regressor, and end-effector kinematics.  The concrete
plant is the planar two-link arm with the standard 5-vector dynamic
parameterization (a1, a2, a3, b1, b2); joint vectors keep a runtime
dimension so the interfaces extend to more DOFs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

JointVec = np.ndarray


def _check_finite(name: str, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite, got {v!r}")
    return v


@dataclass(frozen=True)
class ArmModel:
    """Physical parameters of a two-link planar arm.

    Masses in kg, lengths in m, inertias about the COM in kg*m^2.  g0 is the
    gravitational acceleration seen by the links; g0 = 0 models an arm whose
    gravity load is compensated upstream (or one moving in a horizontal
    plane).
    """

    m1: float
    m2: float
    l1: float
    l2: float
    lc1: float
    lc2: float
    I1: float
    I2: float
    g0: float = 0.0

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "lc1", "lc2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.lc1 > self.l1 or self.lc2 > self.l2:
            raise ValueError("COM offsets must satisfy 0 < lc <= l")
        if self.I1 < 0.0 or self.I2 < 0.0:
            raise ValueError("link inertias must be >= 0")

    @property
    def dof(self) -> int:
        return 2

    @classmethod
    def canonical(cls, g0: float = 0.0) -> "ArmModel":
        """Reference arm used throughout the test scenarios.

        Uniform-density links: lc = l/2, I = m*l^2/12.
        """
        m1, m2, l1, l2 = 1.0, 0.8, 0.5, 0.4
        return cls(m1=m1, m2=m2, l1=l1, l2=l2, lc1=l1 / 2, lc2=l2 / 2,
                   I1=m1 * l1**2 / 12, I2=m2 * l2**2 / 12, g0=g0)

    @classmethod
    def haptic(cls, g0: float = 0.0) -> "ArmModel":
        """A light desktop-stylus-scale arm (master side of hybrid setups)."""
        m1, m2, l1, l2 = 0.06, 0.045, 0.17, 0.14
        return cls(m1=m1, m2=m2, l1=l1, l2=l2, lc1=l1 / 2, lc2=l2 / 2,
                   I1=m1 * l1**2 / 12, I2=m2 * l2**2 / 12, g0=g0)

    def dyn_params(self) -> "DynParams":
        a1 = self.I1 + self.I2 + self.m1 * self.lc1**2 \
            + self.m2 * (self.l1**2 + self.lc2**2)
        a2 = self.m2 * self.l1 * self.lc2
        a3 = self.I2 + self.m2 * self.lc2**2
        b1 = (self.m1 * self.lc1 + self.m2 * self.l1) * self.g0
        b2 = self.m2 * self.lc2 * self.g0
        return DynParams(theta=np.array([a1, a2, a3, b1, b2]))

    @property
    def theta_tuple(self) -> tuple[float, ...]:
        """Cached (a1, a2, a3, b1, b2) as plain floats for the steppers."""
        cached = self.__dict__.get("_theta_tuple")
        if cached is None:
            cached = tuple(float(v) for v in self.dyn_params().theta)
            object.__setattr__(self, "_theta_tuple", cached)
        return cached


@dataclass(frozen=True)
class DynParams:
    """Constant parameter vector theta = (a1, a2, a3, b1, b2)."""

    theta: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "theta", th)
        if th.shape != (5,):
            raise ValueError("theta must have length 5")
        a1, a2, a3 = th[0], th[1], th[2]
        if not (a1 > a3 > 0.0 and a2 >= 0.0):
            raise ValueError("require a1 > a3 > 0 and a2 >= 0")
        # positive definiteness of M for all q: worst case at cos(q2) = -1
        if (a1 - 2 * a2) * a3 - (a3 - a2) ** 2 <= 0.0:
            raise ValueError("parameters do not give a positive definite M")


def mass_matrix(model: ArmModel, q: JointVec) -> np.ndarray:
    """Inertia matrix M(q); symmetric and uniformly positive definite."""
    q = _check_finite("q", q)
    a1, a2, a3, _, _ = model.dyn_params().theta
    c2 = np.cos(q[1])
    m12 = a3 + a2 * c2
    return np.array([[a1 + 2.0 * a2 * c2, m12], [m12, a3]])


def coriolis_matrix(model: ArmModel, q: JointVec, qd: JointVec) -> np.ndarray:
    """Coriolis/centrifugal matrix from Christoffel symbols.

    This construction makes dM/dt - 2C skew-symmetric pointwise.
    """
    q = _check_finite("q", q)
    qd = _check_finite("qd", qd)
    a2 = model.dyn_params().theta[1]
    h = -a2 * np.sin(q[1])
    return np.array([[h * qd[1], h * (qd[0] + qd[1])], [-h * qd[0], 0.0]])


def gravity_vector(model: ArmModel, q: JointVec) -> JointVec:
    """Gravity torque g(q); identically zero when model.g0 == 0."""
    q = _check_finite("q", q)
    _, _, _, b1, b2 = model.dyn_params().theta
    c12 = np.cos(q[0] + q[1])
    return np.array([b1 * np.cos(q[0]) + b2 * c12, b2 * c12])


def _regressor_raw(q, qd, zeta, zetad) -> np.ndarray:
    s2, c2 = np.sin(q[1]), np.cos(q[1])
    c1, c12 = np.cos(q[0]), np.cos(q[0] + q[1])
    y12 = c2 * (2.0 * zetad[0] + zetad[1]) \
        - s2 * (qd[1] * zeta[0] + (qd[0] + qd[1]) * zeta[1])
    y22 = c2 * zetad[0] + s2 * qd[0] * zeta[0]
    return np.array([
        [zetad[0], y12, zetad[1], c1, c12],
        [0.0, y22, zetad[0] + zetad[1], 0.0, c12],
    ])


def regressor(q: JointVec, qd: JointVec, zeta: JointVec,
              zetad: JointVec) -> np.ndarray:
    """Regressor Y with Y(q, qd, zeta, zetad) @ theta = M zetad + C zeta + g.

    The factorization depends only on joint angles and the passed vectors,
    not on the physical parameters.
    """
    q = _check_finite("q", q)
    qd = _check_finite("qd", qd)
    zeta = _check_finite("zeta", zeta)
    zetad = _check_finite("zetad", zetad)
    return _regressor_raw(q, qd, zeta, zetad)


def forward_kinematics_and_jacobian(model: ArmModel,
                                    q: JointVec) -> tuple[np.ndarray, np.ndarray]:
    """End-effector position and its 2x2 Jacobian.

    The Jacobian is returned as-is at singular configurations (q2 in {0, pi});
    callers decide how to handle it.
    """
    q = _check_finite("q", q)
    l1, l2 = model.l1, model.l2
    s1, c1 = np.sin(q[0]), np.cos(q[0])
    s12, c12 = np.sin(q[0] + q[1]), np.cos(q[0] + q[1])
    x = np.array([l1 * c1 + l2 * c12, l1 * s1 + l2 * s12])
    jac = np.array([[-l1 * s1 - l2 * s12, -l2 * s12],
                    [l1 * c1 + l2 * c12, l2 * c12]])
    return x, jac
