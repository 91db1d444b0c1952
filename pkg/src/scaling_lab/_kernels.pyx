# cython: language_level=3
"""Compiled discrete energy and gradient (same contract as the numpy version)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def energy_grad(double[:, ::1] u, signed char[:, ::1] nuc, double dx, double dy,
                double theta, double mu, double eps, double delta, bint want_grad=True):
    cdef Py_ssize_t nx = nuc.shape[0], ny = nuc.shape[1]
    cdef Py_ssize_t i, j
    cdef double area = dx * dy
    cdef double[:, ::1] g1 = np.empty((nx, ny))
    cdef double[:, ::1] g2 = np.empty((nx, ny))
    cdef double[:, ::1] G1 = np.zeros((nx, ny))
    cdef double[:, ::1] G2 = np.zeros((nx, ny))
    cdef double a, b, well, e_mis = 0.0, e_aus = 0.0, e_tv = 0.0
    cdef double d11, d21, d12, d22, r, hv, hd, coef
    for i in range(nx):
        for j in range(ny):
            g1[i, j] = (u[i + 1, j] - u[i, j]) / dx
            g2[i, j] = (u[i, j + 1] - u[i, j]) / dy
    for i in range(nx):
        for j in range(ny):
            if nuc[i, j]:
                a = (g2[i, j] - theta) * (g2[i, j] - theta)
                b = (g2[i, j] - theta + 1.0) * (g2[i, j] - theta + 1.0)
                if a < b:
                    well = theta
                    e_mis += g1[i, j] * g1[i, j] + 0.5 * a
                elif b < a:
                    well = theta - 1.0
                    e_mis += g1[i, j] * g1[i, j] + 0.5 * b
                else:
                    well = theta - 0.5
                    e_mis += g1[i, j] * g1[i, j] + 0.5 * a
                G1[i, j] += 2.0 * area * g1[i, j]
                G2[i, j] += area * (g2[i, j] - well)
            else:
                e_aus += mu * (g1[i, j] * g1[i, j] + g2[i, j] * g2[i, j])
                G1[i, j] += 2.0 * area * mu * g1[i, j]
                G2[i, j] += 2.0 * area * mu * g2[i, j]
    for i in range(nx):
        for j in range(ny):
            if not nuc[i, j]:
                continue
            d11 = d21 = d12 = d22 = 0.0
            if i + 1 < nx and nuc[i + 1, j]:
                d11 = (g1[i + 1, j] - g1[i, j]) / dx
                d21 = (g2[i + 1, j] - g2[i, j]) / dx
            if j + 1 < ny and nuc[i, j + 1]:
                d12 = (g1[i, j + 1] - g1[i, j]) / dy
                d22 = (g2[i, j + 1] - g2[i, j]) / dy
            r = sqrt(d11 * d11 + d21 * d21 + d12 * d12 + d22 * d22)
            if delta > 0.0 and r <= delta:
                hv = r * r / (2.0 * delta)
                hd = r / delta
            elif delta > 0.0:
                hv = r - 0.5 * delta
                hd = 1.0
            else:
                hv = r
                hd = 1.0 if r > 0 else 0.0
            e_tv += hv
            if want_grad and r > 0:
                coef = eps * area * hd / r
                if i + 1 < nx:
                    G1[i + 1, j] += coef * d11 / dx
                    G1[i, j] -= coef * d11 / dx
                    G2[i + 1, j] += coef * d21 / dx
                    G2[i, j] -= coef * d21 / dx
                if j + 1 < ny:
                    G1[i, j + 1] += coef * d12 / dy
                    G1[i, j] -= coef * d12 / dy
                    G2[i, j + 1] += coef * d22 / dy
                    G2[i, j] -= coef * d22 / dy
    e_mis *= area
    e_aus *= area
    e_tv *= eps * area
    if not want_grad:
        return e_mis + e_aus + e_tv, e_mis, e_aus, e_tv, None
    grad = np.zeros((nx + 1, ny + 1))
    cdef double[:, ::1] gr = grad
    for i in range(nx):
        for j in range(ny):
            gr[i + 1, j] += G1[i, j] / dx
            gr[i, j] -= G1[i, j] / dx + G2[i, j] / dy
            gr[i, j + 1] += G2[i, j] / dy
    return e_mis + e_aus + e_tv, e_mis, e_aus, e_tv, grad
