"""Finite-difference reference solution for the lid-driven cavity.

Streamfunction-vorticity formulation on a uniform n x n grid over the
unit square, second-order central differences, red-black SOR sweeps on
both the streamfunction Poisson equation and the steady vorticity
transport equation, Thom's first-order wall vorticity with under-
relaxation. Velocities are recovered from the streamfunction with
central differences; wall velocities are imposed exactly.

Array convention: fields are indexed [ix, iy], x = ix * h, y = iy * h,
lid at iy = n - 1 moving in +x with unit speed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceFailure, ContractViolation, SchemaError


@dataclass
class ReferenceField:
    n: int
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    meta: dict = field(default_factory=dict)

    def interp(self, pts):
        """Bilinear interpolation of (u, v) at (m, 2) points."""
        h = 1.0 / (self.n - 1)
        fx = np.clip(pts[:, 0] / h, 0, self.n - 1 - 1e-12)
        fy = np.clip(pts[:, 1] / h, 0, self.n - 1 - 1e-12)
        i, j = fx.astype(int), fy.astype(int)
        tx, ty = fx - i, fy - j
        out = np.empty((pts.shape[0], 2))
        for k, f in enumerate((self.u, self.v)):
            out[:, k] = (f[i, j] * (1 - tx) * (1 - ty) + f[i + 1, j] * tx * (1 - ty)
                         + f[i, j + 1] * (1 - tx) * ty + f[i + 1, j + 1] * tx * ty)
        return out

    def centerline_u(self, ys):
        pts = np.column_stack([np.full_like(ys, 0.5), ys])
        return self.interp(pts)[:, 0]

    def centerline_v(self, xs):
        pts = np.column_stack([xs, np.full_like(xs, 0.5)])
        return self.interp(pts)[:, 1]


def _rb_sor_poisson(psi, w, h2, omega, color):
    """One red-black half-sweep of psi: laplace(psi) = -w."""
    core = psi[1:-1, 1:-1]
    mask = color[1:-1, 1:-1]
    nb = (psi[2:, 1:-1] + psi[:-2, 1:-1] + psi[1:-1, 2:] + psi[1:-1, :-2])
    upd = 0.25 * (nb + h2 * w[1:-1, 1:-1])
    core[mask] += omega * (upd[mask] - core[mask])


def _rb_sor_vorticity(w, u, v, re, h, omega, color):
    """One red-black half-sweep of steady vorticity transport."""
    mask = color[1:-1, 1:-1]
    cx = 0.5 * re * h * u[1:-1, 1:-1]
    cy = 0.5 * re * h * v[1:-1, 1:-1]
    upd = 0.25 * ((1.0 - cx) * w[2:, 1:-1] + (1.0 + cx) * w[:-2, 1:-1]
                  + (1.0 - cy) * w[1:-1, 2:] + (1.0 + cy) * w[1:-1, :-2])
    core = w[1:-1, 1:-1]
    core[mask] += omega * (upd[mask] - core[mask])


def solve_cavity_fd(re=100.0, n=129, tol=1e-7, max_iters=100000,
                    omega=1.5, omega_w=None, wall_relax=0.6,
                    check_every=50) -> ReferenceField:
    """Iterate psi / omega relaxation until both residuals drop below tol.

    Residuals are the max norms of the discrete Poisson equation and the
    steady vorticity transport equation, normalised by the lid speed
    scales. Raises ConvergenceFailure when max_iters is hit first or the
    iteration blows up. ``omega`` relaxes the streamfunction sweep;
    the convection-bearing vorticity sweep uses ``omega_w`` (default: same
    capped at 1.5, above which it destabilises at moderate Re).
    """
    if re <= 0 or tol <= 0:
        raise ContractViolation("need re > 0 and tol > 0")
    if n < 65 or n % 2 == 0:
        raise ContractViolation("need odd n >= 65")
    if omega_w is None:
        omega_w = min(omega, 1.5)
    h = 1.0 / (n - 1)
    h2 = h * h
    psi = np.zeros((n, n))
    w = np.zeros((n, n))
    u = np.zeros((n, n))
    v = np.zeros((n, n))
    u[:, -1] = 1.0  # lid
    ix = np.arange(n)
    color0 = (ix[:, None] + ix[None, :]) % 2 == 0
    color1 = ~color0

    def wall_vorticity():
        tw = np.empty(4, dtype=object)
        w_new_left = -2.0 * psi[1, :] / h2
        w_new_right = -2.0 * psi[-2, :] / h2
        w_new_bot = -2.0 * psi[:, 1] / h2
        w_new_top = -2.0 * psi[:, -2] / h2 - 2.0 / h
        w[0, :] += wall_relax * (w_new_left - w[0, :])
        w[-1, :] += wall_relax * (w_new_right - w[-1, :])
        w[:, 0] += wall_relax * (w_new_bot - w[:, 0])
        w[:, -1] += wall_relax * (w_new_top - w[:, -1])

    def velocities():
        u[1:-1, 1:-1] = (psi[1:-1, 2:] - psi[1:-1, :-2]) / (2 * h)
        v[1:-1, 1:-1] = -(psi[2:, 1:-1] - psi[:-2, 1:-1]) / (2 * h)

    def residuals():
        lap_psi = (psi[2:, 1:-1] + psi[:-2, 1:-1] + psi[1:-1, 2:]
                   + psi[1:-1, :-2] - 4 * psi[1:-1, 1:-1]) / h2
        r_psi = np.abs(lap_psi + w[1:-1, 1:-1]).max() * h2
        lap_w = (w[2:, 1:-1] + w[:-2, 1:-1] + w[1:-1, 2:]
                 + w[1:-1, :-2] - 4 * w[1:-1, 1:-1]) / h2
        wx = (w[2:, 1:-1] - w[:-2, 1:-1]) / (2 * h)
        wy = (w[1:-1, 2:] - w[1:-1, :-2]) / (2 * h)
        r_w = np.abs(u[1:-1, 1:-1] * wx + v[1:-1, 1:-1] * wy
                     - lap_w / re).max() * h2 * re
        return max(r_psi, r_w)

    res = np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, max_iters + 1):
            wall_vorticity()
            velocities()
            for color in (color0, color1):
                _rb_sor_vorticity(w, u, v, re, h, omega_w, color)
            for color in (color0, color1):
                _rb_sor_poisson(psi, w, h2, omega, color)
            if it % check_every == 0:
                velocities()
                res = residuals()
                if not np.isfinite(res):
                    raise ConvergenceFailure(
                        f"cavity solver diverged at n={n}, Re={re} "
                        f"(omega={omega}, omega_w={omega_w})",
                        residual=float("nan"), iterations=it)
                if res < tol:
                    break
        else:
            raise ConvergenceFailure(
                f"cavity solver at n={n}, Re={re}: residual {res:.3e} > tol "
                f"{tol:.3e} after {max_iters} iterations",
                residual=res, iterations=max_iters)
    velocities()
    u[:, -1] = 1.0
    v[:, -1] = 0.0
    u[:, 0] = v[:, 0] = 0.0
    u[0, :] = v[0, :] = 0.0
    u[-1, :] = v[-1, :] = 0.0
    u[0, -1] = u[-1, -1] = 0.0  # corners belong to the fixed walls
    grid = np.linspace(0.0, 1.0, n)
    return ReferenceField(n=n, x=grid, y=grid, u=u, v=v,
                          meta={"re": re, "tol": tol, "iterations": it,
                                "residual": float(res), "omega": omega})


# ----------------------------------------------------------------- file I/O

@dataclass
class CenterlineTable:
    y_u: np.ndarray   # (m, 2): y, u(0.5, y)
    x_v: np.ndarray   # (m, 2): x, v(x, 0.5)
    provenance: str = ""

    def __post_init__(self):
        for arr, name, ends in ((self.y_u, "y", (0.0, 1.0)),
                                (self.x_v, "x", (0.0, 0.0))):
            coords = arr[:, 0]
            if not (np.diff(coords) > 0).all():
                raise SchemaError(f"{name} coordinates must be strictly increasing")
            if coords[0] < 0.0 or coords[-1] > 1.0:
                raise SchemaError(f"{name} coordinates must lie in [0, 1]")
        if abs(self.y_u[0, 1]) > 1e-9 or abs(self.y_u[-1, 1] - 1.0) > 1e-9:
            raise SchemaError("u centerline endpoints must match no-slip/lid values")
        if abs(self.x_v[0, 1]) > 1e-9 or abs(self.x_v[-1, 1]) > 1e-9:
            raise SchemaError("v centerline endpoints must vanish at the walls")


def save_centerline(table: CenterlineTable, path):
    with open(path, "w", newline="") as fh:
        for line in table.provenance.splitlines():
            fh.write(f"# {line}\n")
        wr = csv.writer(fh)
        wr.writerow(["axis", "coord", "value"])
        for y, uu in table.y_u:
            wr.writerow(["y", repr(float(y)), repr(float(uu))])
        for x, vv in table.x_v:
            wr.writerow(["x", repr(float(x)), repr(float(vv))])


def load_centerline(path) -> CenterlineTable:
    prov, rows = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                prov.append(line.lstrip("# "))
                continue
            rows.append((lineno, line))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [c.strip() for c in rows[0][1].split(",")]
    if header != ["axis", "coord", "value"]:
        raise SchemaError(f"{path}: line {rows[0][0]}: header must be axis,coord,value")
    ys, xs = [], []
    for lineno, line in rows[1:]:
        parts = [c.strip() for c in line.split(",")]
        if len(parts) != 3:
            raise SchemaError(f"{path}: line {lineno}: expected 3 columns")
        axis, coord, value = parts
        try:
            pair = (float(coord), float(value))
        except ValueError as exc:
            raise SchemaError(f"{path}: line {lineno}: {exc}") from None
        if axis == "y":
            ys.append(pair)
        elif axis == "x":
            xs.append(pair)
        else:
            raise SchemaError(f"{path}: line {lineno}: axis must be 'x' or 'y'")
    if not ys or not xs:
        raise SchemaError(f"{path}: need both x and y centerlines")
    return CenterlineTable(np.array(ys), np.array(xs), "\n".join(prov))


def save_reference(fieldval: ReferenceField, path):
    with open(path, "w", newline="") as fh:
        fh.write(f"# lid-driven cavity reference, Re={fieldval.meta.get('re')}, "
                 f"n={fieldval.n}\n")
        wr = csv.writer(fh)
        wr.writerow(["x", "y", "u", "v"])
        for i in range(fieldval.n):
            for j in range(fieldval.n):
                wr.writerow([repr(float(fieldval.x[i])), repr(float(fieldval.y[j])),
                             repr(float(fieldval.u[i, j])), repr(float(fieldval.v[i, j]))])


def load_reference(path) -> ReferenceField:
    xs, ys, us, vs = [], [], [], []
    with open(path) as fh:
        rows = [(no, ln.strip()) for no, ln in enumerate(fh, 1)
                if ln.strip() and not ln.startswith("#")]
    if not rows or [c.strip() for c in rows[0][1].split(",")] != ["x", "y", "u", "v"]:
        raise SchemaError(f"{path}: header must be x,y,u,v")
    for lineno, line in rows[1:]:
        parts = line.split(",")
        if len(parts) != 4:
            raise SchemaError(f"{path}: line {lineno}: expected 4 columns")
        try:
            x, y, uu, vv = map(float, parts)
        except ValueError as exc:
            raise SchemaError(f"{path}: line {lineno}: {exc}") from None
        xs.append(x), ys.append(y), us.append(uu), vs.append(vv)
    n = int(round(np.sqrt(len(xs))))
    if n * n != len(xs):
        raise SchemaError(f"{path}: {len(xs)} rows is not a square grid")
    grid = np.asarray(sorted(set(xs)))
    if grid.size != n:
        raise SchemaError(f"{path}: grid is not an n x n lattice")
    u = np.asarray(us).reshape(n, n)
    v = np.asarray(vs).reshape(n, n)
    return ReferenceField(n=n, x=grid, y=grid, u=u, v=v, meta={"path": str(path)})
