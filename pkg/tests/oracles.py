"""Independent reference values built straight from the drop geometry.

For a fixed orientation the rod's two end-disc centres sit at a fixed offset
``(l|cos phi|, l sin phi)``; the object misses every line iff both centres
lie in the cell shrunk by ``sigma/2`` on each side, an event of probability
``(a - sigma - l|cos phi|)+ (b - sigma - l sin phi)+ / (a b)``. Averaging over
``phi`` (and over a uniform tilt ``psi`` in 3D) with adaptive quadrature gives
values that share no code with the closed forms.
"""

import math

from scipy import integrate

QUAD = dict(epsabs=1e-13, epsrel=1e-13, limit=400)


def _miss_given_angle(le, phi, sigma, a, b):
    fx = 1.0 if math.isinf(a) else max(0.0, a - sigma - le * abs(math.cos(phi))) / a
    fy = max(0.0, b - sigma - le * math.sin(phi)) / b
    return fx * fy


def _kinks_phi(le, sigma, a, b):
    pts = []
    if le > 0:
        if not math.isinf(a) and 0 < (a - sigma) / le < 1:
            c = math.acos((a - sigma) / le)
            pts += [c, math.pi - c]
        if 0 < (b - sigma) / le < 1:
            s = math.asin((b - sigma) / le)
            pts += [s, math.pi - s]
    return sorted(pts)


def p2d(l, a, b, sigma=0.0):
    if sigma >= b:
        return 1.0
    pts = _kinks_phi(l, sigma, a, b)
    val, _ = integrate.quad(lambda phi: _miss_given_angle(l, phi, sigma, a, b), 0, math.pi,
                            points=pts or None, **QUAD)
    return 1.0 - val / math.pi


def p3d(l, a, b, sigma=0.0):
    if sigma >= b:
        return 1.0
    # tilt kinks where l sin(psi) crosses b - sigma, a - sigma, the shrunk diagonal
    cuts = []
    for th in (b - sigma, a - sigma, math.hypot(a - sigma, b - sigma)):
        if math.isfinite(th) and 0 < th < l:
            cuts.append(math.asin(th / l))
    inner = lambda psi: 1.0 - p2d(l * math.sin(psi), a, b, sigma)
    val, _ = integrate.quad(inner, 0, math.pi / 2, points=sorted(cuts) or None,
                            epsabs=1e-12, epsrel=1e-12, limit=200)
    return 1.0 - 2 / math.pi * val
