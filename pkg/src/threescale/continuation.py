"""Pseudo-arclength continuation of the zero set of ``G: R^(m+1) -> R^m``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def fd_jacobian(G, w, rel=1e-7):
    """Central-difference Jacobian of ``G`` at ``w``."""
    w = np.asarray(w, dtype=float)
    g0 = np.asarray(G(w))
    J = np.empty((len(g0), len(w)))
    for j in range(len(w)):
        h = rel * max(1.0, abs(w[j]))
        e = np.zeros_like(w)
        e[j] = h
        J[:, j] = (np.asarray(G(w + e)) - np.asarray(G(w - e))) / (2 * h)
    return J


def tangent(J, prev=None):
    """Unit null vector of the ``m x (m+1)`` matrix ``J``, oriented along ``prev``."""
    _, _, Vt = np.linalg.svd(J)
    t = Vt[-1]
    if prev is not None and np.dot(t, prev) < 0:
        t = -t
    return t / np.linalg.norm(t)


@dataclass
class ArclengthSettings:
    h0: float = 1e-3
    h_min: float = 1e-9
    h_max: float = 5e-2
    max_steps: int = 2000
    newton_iters: int = 8
    tol: float = 1e-10
    res_tol: float = 1e-9


class Arclength:
    """Predictor-corrector stepping along a solution curve.

    ``G`` maps a point ``w`` (unknowns followed by the free parameter) to its
    residual; ``J`` (optional) returns ``dG/dw``. Newton failures halve the
    step; quick convergence grows it.
    """

    def __init__(self, G: Callable, w0, J: Callable | None = None, t0=None,
                 settings: ArclengthSettings | None = None, direction: float = 1.0):
        self.G = G
        self.J = J or (lambda w: fd_jacobian(G, w))
        self.s = settings or ArclengthSettings()
        self.w = np.asarray(w0, dtype=float)
        Jw = self.J(self.w)
        self.t = tangent(Jw, t0)
        if t0 is None and direction * self.t[-1] < 0:
            self.t = -self.t
        self.h = self.s.h0
        self.failed = False
        # project the seed onto the curve
        w, _ = self.correct(self.w, self.t)
        if w is not None:
            self.w = w
            self.t = tangent(self.J(w), self.t)

    def correct(self, w_pred, t_ref):
        """Newton on ``G = 0`` plus the hyperplane through ``w_pred`` normal to ``t_ref``."""
        w = np.array(w_pred, dtype=float)
        for it in range(self.s.newton_iters):
            g = np.asarray(self.G(w))
            if not np.all(np.isfinite(g)):
                return None, it
            A = np.vstack([self.J(w), t_ref])
            rhs = np.concatenate([g, [np.dot(t_ref, w - w_pred)]])
            try:
                dw = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                return None, it
            w = w - dw
            if np.linalg.norm(dw) <= self.s.tol * (1.0 + np.linalg.norm(w)):
                g = np.asarray(self.G(w))
                if np.all(np.isfinite(g)) and np.max(np.abs(g)) <= self.s.res_tol:
                    return w, it + 1
        return None, self.s.newton_iters

    def step(self):
        """Advance one accepted step; returns the new point or ``None``."""
        while self.h >= self.s.h_min:
            w_pred = self.w + self.h * self.t
            w_new, iters = self.correct(w_pred, self.t)
            if w_new is not None and np.linalg.norm(w_new - self.w) <= 2.5 * self.h:
                t_new = tangent(self.J(w_new), self.t)
                self.w_prev, self.t_prev = self.w, self.t
                self.w, self.t = w_new, t_new
                if iters <= 3:
                    self.h = min(self.h * 1.5, self.s.h_max)
                return w_new
            self.h *= 0.5
        self.failed = True
        return None

    def locate(self, w_a, t_a, s_lo, s_hi, test, tol=1e-10, max_iter=60):
        """Zero of ``test(w)`` between arclengths ``s_lo`` and ``s_hi`` from ``w_a``.

        Bisection on the corrected points; returns the corrected point with
        the smaller test value.
        """
        def at(sv):
            w, _ = self.correct(w_a + sv * t_a, t_a)
            return w

        wl, wh = at(s_lo) if s_lo > 0 else w_a, at(s_hi)
        if wl is None or wh is None:
            return None
        fl, fh = test(wl), test(wh)
        if fl * fh > 0:
            return None
        for _ in range(max_iter):
            if abs(s_hi - s_lo) < tol:
                break
            sm = 0.5 * (s_lo + s_hi)
            wm = at(sm)
            if wm is None:
                return None
            fm = test(wm)
            if fm == 0:
                return wm
            if fl * fm < 0:
                s_hi, wh, fh = sm, wm, fm
            else:
                s_lo, wl, fl = sm, wm, fm
        return wl if abs(fl) < abs(fh) else wh
