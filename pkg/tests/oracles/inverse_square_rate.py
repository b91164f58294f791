"""Brute-force oracle for gamma_t of J = c / w^2 on [w_min, w_c].

gamma_t = 4 c int (1 - cos w t) / w^2 dw, evaluated by composite Simpson on a
uniform grid fine enough to resolve every oscillation (>= 400 nodes per
period), then cross-checked against the sine-integral closed form

    int_a^b (1 - cos wt)/w^2 dw = (1 - cos at)/a - (1 - cos bt)/b + t (Si(bt) - Si(at)).

The least-squares slope over the sample times is the frozen value used in
tests. Run:  python tests/oracles/inverse_square_rate.py
"""
import numpy as np
from scipy.integrate import simpson
from scipy.special import sici

C, W_MIN, W_C = 0.01, 1e-6, 10.0
T1, T2, SAMPLES = 5.0, 1e3, 64


def gamma_simpson(t):
    n = int(max(2e6, 400 * W_C * t / (2 * np.pi))) | 1
    w = np.linspace(W_MIN, W_C, n)
    f = 2.0 * np.sin(0.5 * w * t) ** 2 / w**2
    return 4 * C * simpson(f, x=w)


def gamma_si(t):
    a, b = W_MIN, W_C
    val = (1 - np.cos(a * t)) / a - (1 - np.cos(b * t)) / b + t * (sici(b * t)[0] - sici(a * t)[0])
    return 4 * C * val


if __name__ == "__main__":
    ts = np.linspace(T1, T2, SAMPLES)
    g_brute = np.array([gamma_simpson(t) for t in ts])
    g_si = np.array([gamma_si(t) for t in ts])
    print("max rel diff brute vs Si:", np.max(np.abs(g_brute / g_si - 1)))
    slope, intercept = np.polyfit(ts, g_brute, 1)
    print(f"slope={slope!r} intercept={intercept!r}")
    print(f"slope / (2 pi c) = {slope / (2 * np.pi * C)!r}")
    for t in (5.0, 100.0, 1000.0):
        print(f"gamma({t}) = {gamma_simpson(t)!r}")
