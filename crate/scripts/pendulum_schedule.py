"""Generates the pendulum control schedule bundled with the CLI preset.

The pendulum starts at rest, tilted 0.4 rad from upright, and is brought
back to the upright equilibrium over [0, 4] s with 50 piecewise-constant
cart accelerations. Each acceleration comes from a discrete-time LQR
designed for the zero-order hold: it is evaluated at the start of an
interval and held. The closed loop is integrated with rk4 and must stay
inside the sampling box of the network inputs.

Writes interval,t_start,u,x0_1..x0_4 to stdout, where x0 is the state at
the start of each interval.
"""

import math
import sys

import numpy as np
from scipy.linalg import expm, solve_discrete_are

M, A, J, D, G = 0.3553, 0.42, 0.0361, 0.005, 9.81
JT = J + M * A * A
N, T_END, SUB = 50, 4.0, 800
DT = T_END / N
U_MAX = 15.0
X_START = [0.4, 0.0, 0.0, 0.0]
BOX = [math.pi, 6.0, 1.0, 3.0]
Q_WEIGHTS = [50.0, 1.0, 100.0, 10.0]
R_WEIGHT = 1.0


def rhs(x, u):
    phi, omega, _, v = x
    ang = (M * A * G * math.sin(phi) - D * omega + M * A * u * math.cos(phi)) / JT
    return (omega, ang, v, u)


def rk4(x, u, h):
    k1 = rhs(x, u)
    k2 = rhs([a + 0.5 * h * b for a, b in zip(x, k1)], u)
    k3 = rhs([a + 0.5 * h * b for a, b in zip(x, k2)], u)
    k4 = rhs([a + h * b for a, b in zip(x, k3)], u)
    return [a + h / 6.0 * (p + 2 * q + 2 * r + s) for a, p, q, r, s in zip(x, k1, k2, k3, k4)]


def lqr_gain():
    a = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [M * A * G / JT, -D / JT, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
    ])
    b = np.array([[0.0], [M * A / JT], [0.0], [1.0]])
    # Zero-order-hold discretization via the augmented matrix exponential.
    aug = np.zeros((5, 5))
    aug[:4, :4] = a * DT
    aug[:4, 4:] = b * DT
    e = expm(aug)
    ad, bd = e[:4, :4], e[:4, 4:]
    q = np.diag(Q_WEIGHTS)
    r = np.array([[R_WEIGHT]])
    p = solve_discrete_are(ad, bd, q, r)
    return np.linalg.solve(r + bd.T @ p @ bd, bd.T @ p @ ad)[0]


def control(x, gain):
    u = -float(gain @ np.array(x))
    return max(-U_MAX, min(U_MAX, u))


def main():
    gain = lqr_gain()
    x = list(X_START)
    rows, peak = [], [0.0] * 4
    for i in range(N):
        u = control(x, gain)
        rows.append([i, i * DT, u, *x])
        for _ in range(SUB):
            x = rk4(x, u, DT / SUB)
            for j in range(4):
                peak[j] = max(peak[j], abs(x[j]))
    print("final state", x, "peak |x_i|", peak, file=sys.stderr)
    if any(p > b for p, b in zip(peak, BOX)):
        sys.exit("trajectory leaves the sampling box")
    print("interval,t_start,u,x0_1,x0_2,x0_3,x0_4")
    for row in rows:
        print(",".join([str(row[0])] + [repr(float(v)) for v in row[1:]]))


if __name__ == "__main__":
    main()
