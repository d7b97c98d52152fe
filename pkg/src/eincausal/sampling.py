"""Seeded random generators and deterministic sphere meshes."""

import math

import numpy as np

from .errors import ValidationError


def make_rng(seed):
    """Counter-based generator; identical streams for identical seeds."""
    if seed is None:
        raise ValidationError("an explicit seed is required")
    return np.random.Generator(np.random.Philox(int(seed)))


def random_sphere_points(rng, n, count):
    """``count`` points uniform on S^n, shape (count, n+1)."""
    g = rng.standard_normal((count, n + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def random_tangents(rng, xs):
    """One uniformly random unit tangent vector at each row of ``xs``."""
    xs = np.atleast_2d(xs)
    while True:
        g = rng.standard_normal(xs.shape)
        g -= np.sum(g * xs, axis=1, keepdims=True) * xs
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        if np.all(norms > 1e-8):
            return g / norms


def tangent_frame(x):
    """Orthonormal matrix whose first column is exactly ``x``.

    The remaining columns span the tangent space of the sphere at ``x``.
    """
    x = np.asarray(x, dtype=float)
    dim = x.shape[0]
    # Householder reflection swapping e_1 and x.
    e1 = np.zeros(dim)
    e1[0] = 1.0
    v = e1 - x
    nv = float(v @ v)
    if nv < 1e-30:
        return np.eye(dim)
    h = np.eye(dim) - 2.0 * np.outer(v, v) / nv
    h[:, 0] = x
    return h


def fibonacci_sphere(count):
    """Quasi-uniform points on S^2 (golden-angle spiral)."""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def sphere_mesh(n, mesh):
    """Deterministic sample of S^n with typical spacing about ``mesh``.

    S^2 uses a golden spiral; higher spheres use a projected cube-surface grid.
    """
    if mesh <= 0:
        raise ValidationError(f"mesh must be positive, got {mesh}")
    if n == 2:
        count = max(8, int(math.ceil(4.0 * math.pi / mesh**2)))
        return fibonacci_sphere(count)
    k = max(2, int(math.ceil(2.0 / mesh)))
    axis = np.linspace(-1.0, 1.0, k + 1)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    face = np.column_stack([g.ravel() for g in grids])
    pts = []
    for ax in range(n + 1):
        for sign in (-1.0, 1.0):
            p = np.insert(face, ax, sign, axis=1)
            pts.append(p)
    pts = np.unique(np.round(np.vstack(pts), 12), axis=0)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)
