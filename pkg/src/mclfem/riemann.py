"""Exact solution of the one-dimensional Euler Riemann problem (ideal gas).

Star-region pressure by Newton iteration on the standard pressure function,
then self-similar sampling in xi = x/t.
"""

from __future__ import annotations

import numpy as np


class UnsupportedRiemannProblem(ValueError):
    pass


class ExactRiemannSolver:
    """Exact Riemann solver for primitive states ``(rho, u, p)``."""

    def __init__(self, gamma: float, left, right, tol: float = 1e-12, max_iter: int = 100):
        if not gamma > 1:
            raise ValueError("gamma must exceed 1")
        self.gamma = g = float(gamma)
        self.left = tuple(float(s) for s in left)
        self.right = tuple(float(s) for s in right)
        rl, ul, pl = self.left
        rr, ur, pr = self.right
        if min(rl, rr, pl, pr) <= 0:
            raise UnsupportedRiemannProblem("densities and pressures must be positive")
        self.cl = np.sqrt(g * pl / rl)
        self.cr = np.sqrt(g * pr / rr)
        if 2.0 / (g - 1.0) * (self.cl + self.cr) <= ur - ul:
            raise UnsupportedRiemannProblem("initial data generate vacuum")
        self.p_star, self.u_star = self._solve_star(tol, max_iter)

    def _pressure_function(self, p, rho_k, p_k, c_k):
        g = self.gamma
        if p > p_k:
            A = 2.0 / ((g + 1.0) * rho_k)
            B = (g - 1.0) / (g + 1.0) * p_k
            sq = np.sqrt(A / (p + B))
            return (p - p_k) * sq, sq * (1.0 - 0.5 * (p - p_k) / (B + p))
        ratio = p / p_k
        f = 2.0 * c_k / (g - 1.0) * (ratio ** ((g - 1.0) / (2.0 * g)) - 1.0)
        df = ratio ** (-(g + 1.0) / (2.0 * g)) / (rho_k * c_k)
        return f, df

    def _solve_star(self, tol, max_iter):
        rl, ul, pl = self.left
        rr, ur, pr = self.right
        du = ur - ul
        # primitive-variable guess, kept positive
        p_pv = 0.5 * (pl + pr) - 0.125 * du * (rl + rr) * (self.cl + self.cr)
        p = max(tol, p_pv)
        for _ in range(max_iter):
            fl, dfl = self._pressure_function(p, rl, pl, self.cl)
            fr, dfr = self._pressure_function(p, rr, pr, self.cr)
            p_new = p - (fl + fr + du) / (dfl + dfr)
            if p_new < 0:
                p_new = tol
            change = 2.0 * abs(p_new - p) / (p_new + p)
            p = p_new
            if change < tol:
                break
        else:
            raise RuntimeError("star pressure iteration did not converge")
        fl, _ = self._pressure_function(p, rl, pl, self.cl)
        fr, _ = self._pressure_function(p, rr, pr, self.cr)
        return p, 0.5 * (ul + ur) + 0.5 * (fr - fl)

    def sample(self, xi):
        """Primitive state (rho, u, p) at similarity coordinates ``xi``."""
        g = self.gamma
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        rho = np.empty_like(xi)
        vel = np.empty_like(xi)
        prs = np.empty_like(xi)
        ps, us = self.p_star, self.u_star
        g1 = (g - 1.0) / (2.0 * g)
        g6 = (g - 1.0) / (g + 1.0)
        g5 = 2.0 / (g + 1.0)
        g7 = 0.5 * (g - 1.0)
        for side, sign in (("left", -1.0), ("right", 1.0)):
            r_k, u_k, p_k = getattr(self, side)
            c_k = self.cl if side == "left" else self.cr
            mask = xi <= us if side == "left" else xi > us
            s = xi[mask]
            r_out = np.full(s.shape, r_k)
            u_out = np.full(s.shape, u_k)
            p_out = np.full(s.shape, p_k)
            # work in the frame where the wave moves towards -sign
            if ps > p_k:
                speed = u_k + sign * c_k * np.sqrt((g + 1.0) / (2.0 * g) * ps / p_k + g1)
                star = sign * s < sign * speed
                r_out[star] = r_k * (ps / p_k + g6) / (g6 * ps / p_k + 1.0)
                u_out[star] = us
                p_out[star] = ps
            else:
                head = u_k + sign * c_k
                tail = us + sign * c_k * (ps / p_k) ** g1
                star = sign * s <= sign * tail
                fan = (~star) & (sign * s < sign * head)
                r_out[star] = r_k * (ps / p_k) ** (1.0 / g)
                u_out[star] = us
                p_out[star] = ps
                sf = s[fan]
                c = g5 * (c_k - sign * g7 * (u_k - sf))
                u_out[fan] = g5 * (-sign * c_k + g7 * u_k + sf)
                r_out[fan] = r_k * (c / c_k) ** (2.0 / (g - 1.0))
                p_out[fan] = p_k * (c / c_k) ** (2.0 * g / (g - 1.0))
            rho[mask], vel[mask], prs[mask] = r_out, u_out, p_out
        return rho, vel, prs


def exact_riemann_reference(gamma: float, left, right, xi):
    """Primitive (rho, u, p) of the exact Riemann solution at ``xi = x/t``."""
    return ExactRiemannSolver(gamma, left, right).sample(xi)


def periodic_sod_reference(x, t: float, gamma: float, left, right, x0: float, length: float):
    """Exact solution for the periodic two-interface Sod setup.

    ``left`` occupies [0, x0), ``right`` occupies [x0, length); the seam at
    0 = length is a mirrored Riemann problem. Valid until waves from the two
    interfaces meet.
    """
    x = np.mod(np.asarray(x, dtype=float), length)
    rho = np.empty_like(x)
    vel = np.empty_like(x)
    prs = np.empty_like(x)
    main = (x >= 0.5 * x0) & (x < 0.5 * (x0 + length))
    if t <= 0:
        inside = x < x0
        for k, val in enumerate(left):
            (rho, vel, prs)[k][inside] = val
        for k, val in enumerate(right):
            (rho, vel, prs)[k][~inside] = val
        return rho, vel, prs
    rho[main], vel[main], prs[main] = ExactRiemannSolver(gamma, left, right).sample((x[main] - x0) / t)
    seam = ~main
    s = np.where(x[seam] < 0.5 * x0, x[seam], x[seam] - length)
    rho[seam], vel[seam], prs[seam] = ExactRiemannSolver(gamma, right, left).sample(s / t)
    return rho, vel, prs
