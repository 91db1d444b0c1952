"""Numpy implementation of the discrete energy and its gradient."""

import numpy as np


def _huber(r, delta):
    if delta <= 0.0:
        return r, np.where(r > 0, 1.0, 0.0)
    small = r <= delta
    val = np.where(small, r * r / (2.0 * delta), r - 0.5 * delta)
    dval = np.where(small, r / delta, 1.0)
    return val, dval


def energy_grad(u, nuc, dx, dy, theta, mu, eps, delta, want_grad=True):
    """Energy of nodal values ``u`` (shape (nx+1, ny+1)) and its gradient.

    ``nuc`` is a (nx, ny) int8 mask of nucleus cells.  Returns
    (total, misfit, austenite, surface, grad).
    """
    area = dx * dy
    nucm = nuc.astype(bool)
    g1 = (u[1:, :-1] - u[:-1, :-1]) / dx
    g2 = (u[:-1, 1:] - u[:-1, :-1]) / dy

    wa = (g2 - theta) ** 2
    wb = (g2 - theta + 1.0) ** 2
    # at an exact tie the two branches are averaged (a valid subgradient)
    well = np.where(wa < wb, theta, np.where(wb < wa, theta - 1.0, theta - 0.5))
    mis = g1 * g1 + 0.5 * np.minimum(wa, wb)
    aus = mu * (g1 * g1 + g2 * g2)
    e_mis = area * float(np.sum(mis[nucm]))
    e_aus = area * float(np.sum(aus[~nucm]))

    nx, ny = nuc.shape
    d11 = np.zeros_like(g1)
    d21 = np.zeros_like(g1)
    d12 = np.zeros_like(g1)
    d22 = np.zeros_like(g1)
    px = nucm[:-1, :] & nucm[1:, :]
    py = nucm[:, :-1] & nucm[:, 1:]
    d11[:-1, :] = np.where(px, (g1[1:, :] - g1[:-1, :]) / dx, 0.0)
    d21[:-1, :] = np.where(px, (g2[1:, :] - g2[:-1, :]) / dx, 0.0)
    d12[:, :-1] = np.where(py, (g1[:, 1:] - g1[:, :-1]) / dy, 0.0)
    d22[:, :-1] = np.where(py, (g2[:, 1:] - g2[:, :-1]) / dy, 0.0)
    r = np.sqrt(d11 ** 2 + d21 ** 2 + d12 ** 2 + d22 ** 2)
    hv, hd = _huber(r, delta)
    e_tv = eps * area * float(np.sum(hv[nucm]))
    total = e_mis + e_aus + e_tv
    if not want_grad:
        return total, e_mis, e_aus, e_tv, None

    G1 = np.where(nucm, 2.0 * area * g1, 2.0 * area * mu * g1)
    G2 = np.where(nucm, area * (g2 - well), 2.0 * area * mu * g2)
    coef = np.where(nucm & (r > 0), eps * area * hd / np.where(r > 0, r, 1.0), 0.0)
    c11 = coef * d11 / dx
    c21 = coef * d21 / dx
    c12 = coef * d12 / dy
    c22 = coef * d22 / dy
    G1[1:, :] += c11[:-1, :]
    G1[:-1, :] -= c11[:-1, :]
    G2[1:, :] += c21[:-1, :]
    G2[:-1, :] -= c21[:-1, :]
    G1[:, 1:] += c12[:, :-1]
    G1[:, :-1] -= c12[:, :-1]
    G2[:, 1:] += c22[:, :-1]
    G2[:, :-1] -= c22[:, :-1]

    grad = np.zeros_like(u)
    grad[1:, :-1] += G1 / dx
    grad[:-1, :-1] -= G1 / dx + G2 / dy
    grad[:-1, 1:] += G2 / dy
    return total, e_mis, e_aus, e_tv, grad
