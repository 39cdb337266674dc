"""Global assembly, boundary conditions, solve, and the convergence study.

Unknowns are ordered fields-first: per element u, M11, M12, M22 (and
theta1, theta2 for t > 0), then 12 trace dofs per mesh vertex - the
(value, d/dx, d/dy) triples of the four generating C1 fields u-hat,
M11-hat, M12-hat, M22-hat.  Boundary conditions are imposed by hard
elimination of vertex dofs, which zeroes the corresponding edge traces
exactly: the value trace of a C1 field along a boundary edge is the
cubic fixed by the endpoint values and tangential derivatives.

Assembly accumulates the element normal-equation contributions in element
order, so the reduction is deterministic for a fixed mesh.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import dpg, hct, linalg, manufactured, mesh as meshmod, quadrature
from .testspace import BrokenTestBasis

N_TRACE_PER_VERTEX = 12
TRACE_U, TRACE_M11, TRACE_M12, TRACE_M22 = 0, 1, 2, 3
VAL, DX, DY = 0, 1, 2


class DofMap:
    """Global index layout and the constrained-dof mask for one mesh."""

    def __init__(self, mesh, config):
        self.mesh = mesh
        self.n_field = config.n_field()
        self.field_total = self.n_field * mesh.num_triangles
        self.n_total = self.field_total + N_TRACE_PER_VERTEX * mesh.num_vertices
        if config.bc == "clamped":
            constrained = apply_bc_clamped(mesh)
        else:
            constrained = apply_bc_simply_supported(mesh)
        self.constrained = np.zeros(self.n_total, dtype=bool)
        for v, f, c in constrained:
            self.constrained[self.trace_dof(v, f, c)] = True
        self.free_index = np.full(self.n_total, -1, dtype=np.int64)
        free = np.flatnonzero(~self.constrained)
        self.free_index[free] = np.arange(free.size)
        self.n_free = free.size
        self.free = free

    def field_dofs(self, ti):
        return self.n_field * ti + np.arange(self.n_field)

    def trace_dof(self, vertex, tfield, comp):
        return (self.field_total + N_TRACE_PER_VERTEX * vertex
                + 3 * tfield + comp)

    def element_dofs(self, ti):
        """Global dofs of the element's columns: fields, then 36 trace."""
        out = np.empty(self.n_field + dpg.N_TRACE_COLS, dtype=np.int64)
        out[: self.n_field] = self.field_dofs(ti)
        verts = self.mesh.triangles[ti]
        k = self.n_field
        for tfield in range(4):
            for v in verts:
                base = self.trace_dof(v, tfield, 0)
                out[k : k + 3] = (base, base + 1, base + 2)
                k += 3
        return out


def apply_bc_simply_supported(mesh):
    """Constrained (vertex, field, comp) triples for the soft support.

    On each boundary edge the deflection trace u-hat and the moment
    components entering M n must vanish: on horizontal edges (normal
    +-e_y) these are M12 and M22, on vertical edges M11 and M12.  Zeroing
    the value and tangential derivative at both endpoints kills the cubic
    value trace on the whole edge; corners accumulate both directions.
    """
    out = set()
    for e in mesh.boundary_edges:
        side = mesh.boundary_side[int(e)]
        if side is None:
            raise ValueError("boundary conditions require a unit-square mesh")
        horizontal = side in (meshmod.BOTTOM, meshmod.TOP)
        tang = DX if horizontal else DY
        fields = (TRACE_U, TRACE_M12, TRACE_M22) if horizontal \
            else (TRACE_U, TRACE_M11, TRACE_M12)
        for v in mesh.edges[e]:
            for f in fields:
                out.add((int(v), f, VAL))
                out.add((int(v), f, tang))
    return sorted(out)


def apply_bc_clamped(mesh):
    """Clamped limit: deflection value and full gradient pinned on the boundary.

    The reduced element's normal derivative is affine along each edge, so
    vertex gradients pin it exactly; the moment traces stay unconstrained.
    """
    out = set()
    for v in mesh.boundary_vertices:
        for c in (VAL, DX, DY):
            out.add((int(v), TRACE_U, c))
    return sorted(out)


class MeshKernels:
    """Per-mesh cache: C1 elements, element kernels, load values."""

    def __init__(self, mesh, config):
        self.mesh = mesh
        self.test_degree = config.test_degree
        self.quad_degree = config.quad_degree
        self.edge_degree = config.edge_degree
        layout = BrokenTestBasis(config.test_degree)
        self.hct_elements = hct.build_all_elements(mesh)
        self.kernels = [
            dpg.ElementKernel(mesh.triangle_coords(ti), self.hct_elements[ti],
                              layout, config.quad_degree, config.edge_degree)
            for ti in range(mesh.num_triangles)
        ]
        ex = manufactured.ExactSolution(0.0)
        self.f_values = [ex.f(k.vpts[:, 0], k.vpts[:, 1]) for k in self.kernels]

    def compatible(self, config):
        return (self.test_degree == config.test_degree
                and self.quad_degree == config.quad_degree
                and self.edge_degree == config.edge_degree)


@dataclass
class Solution:
    u: np.ndarray                 # (nt,) elementwise deflection
    M: np.ndarray                 # (nt, 3) elementwise moments (11, 12, 22)
    theta: np.ndarray | None      # (nt, 2) elementwise rotations, None at t = 0
    trace: np.ndarray             # (12 nv,) trace dofs, zeros where constrained
    eta: float                    # global residual estimator
    eta_elements: np.ndarray      # (nt,) local estimator contributions
    n_free: int
    residual_inf: float           # free-system residual, consistency guard


def element_system(kernels, ti, config):
    """Local Gram matrix, trial-to-test matrix, and load of one element."""
    k = kernels.kernels[ti]
    t = config.t
    G = k.gram(t)
    B = np.hstack([k.b_field(t, config.material), k.b_trace(t)])
    l = k.load(kernels.f_values[ti], t)
    return dpg.ElementSystem(G, B, l)


def assemble_and_solve(mesh, config, kernels=None):
    """Minimum-residual solve of the manufactured problem on one mesh."""
    if kernels is None:
        kernels = MeshKernels(mesh, config)
    elif not kernels.compatible(config):
        raise ValueError("cached kernels were built with different discretization knobs")
    dof = DofMap(mesh, config)
    nt = mesh.num_triangles

    rows, cols, vals = [], [], []
    rhs = np.zeros(dof.n_free)
    systems = []
    for ti in range(nt):
        sysm = element_system(kernels, ti, config)
        systems.append(sysm)
        A_T, b_T = dpg.local_normal_contribution(sysm)
        gdofs = dof.element_dofs(ti)
        fidx = dof.free_index[gdofs]
        keep = fidx >= 0
        sub = fidx[keep]
        A_keep = A_T[np.ix_(keep, keep)]
        rows.append(np.repeat(sub, sub.size))
        cols.append(np.tile(sub, sub.size))
        vals.append(A_keep.ravel())
        np.add.at(rhs, sub, b_T[keep])

    A = linalg.SparseSymMatrix.from_coo(
        dof.n_free, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )
    x_free = linalg.solve_spd(A, rhs, method=config.solver, tol=config.cg_tol)

    full_A = A.full()
    res = np.abs(full_A @ x_free - rhs).max()
    scale = np.abs(rhs).max() + np.abs(full_A).max() * max(np.abs(x_free).max(), 1.0)
    residual_inf = res / scale

    x = np.zeros(dof.n_total)
    x[dof.free] = x_free

    nf = dof.n_field
    fields = x[: dof.field_total].reshape(nt, nf)
    eta_sq = np.empty(nt)
    for ti in range(nt):
        x_loc = x[dof.element_dofs(ti)]
        eta_sq[ti] = dpg.local_residual(systems[ti], x_loc) ** 2
    return Solution(
        u=fields[:, 0].copy(),
        M=fields[:, 1:4].copy(),
        theta=fields[:, 4:6].copy() if nf == 6 else None,
        trace=x[dof.field_total :].copy(),
        eta=float(np.sqrt(eta_sq.sum())),
        eta_elements=np.sqrt(eta_sq),
        n_free=dof.n_free,
        residual_inf=float(residual_inf),
    )


@dataclass
class StudyRecord:
    level: int
    t: float
    ndof: int
    err_u: float
    err_M: float
    err_theta: float
    eta: float
    rate_u: float
    rate_M: float
    rate_theta: float


CSV_HEADER = "level,t,ndof,err_u,err_M,err_theta,eta,rate_u,rate_M,rate_theta"


def _rate(prev, cur):
    if prev is None or not (prev > 0.0) or not (cur > 0.0):
        return float("nan")
    return float(np.log2(prev / cur))


def run_study(t_list, levels, config, mesh_chain=None, kernels_chain=None,
              progress=None):
    """Solve on levels 0..levels-1 for each thickness; returns StudyRecords.

    Meshes and element tables are shared across thicknesses.  `progress`
    is an optional callable taking a status string.
    """
    from dataclasses import replace

    if mesh_chain is None:
        mesh_chain = [meshmod.mesh_at_level(0)]
    while len(mesh_chain) < levels:
        mesh_chain.append(meshmod.refine_uniform(mesh_chain[-1]))
    if kernels_chain is None:
        kernels_chain = [None] * levels
    records = []
    for t in t_list:
        cfg = replace(config, t=t)
        prev = None
        for level in range(levels):
            if kernels_chain[level] is None:
                kernels_chain[level] = MeshKernels(mesh_chain[level], cfg)
            start = time.perf_counter()
            sol = assemble_and_solve(mesh_chain[level], cfg, kernels_chain[level])
            err_u, err_M, err_th = manufactured.l2_errors(
                mesh_chain[level], sol.u, sol.M, sol.theta, t
            )
            rec = StudyRecord(
                level=level, t=t, ndof=sol.n_free,
                err_u=float(err_u), err_M=float(err_M), err_theta=float(err_th),
                eta=sol.eta,
                rate_u=_rate(prev and prev.err_u, err_u),
                rate_M=_rate(prev and prev.err_M, err_M),
                rate_theta=_rate(prev and prev.err_theta, err_th),
            )
            records.append(rec)
            prev = rec
            if progress is not None:
                progress(
                    f"t={t:g} level={level} ndof={rec.ndof} "
                    f"err_u={rec.err_u:.3e} err_M={rec.err_M:.3e} eta={rec.eta:.3e} "
                    f"[{time.perf_counter() - start:.2f}s]"
                )
    return records


def write_csv(records, stream):
    stream.write(CSV_HEADER + "\n")
    for r in records:
        cells = [str(r.level)] + [
            f"{v:.16g}" for v in (r.t, r.ndof, r.err_u, r.err_M, r.err_theta,
                                  r.eta, r.rate_u, r.rate_M, r.rate_theta)
        ]
        stream.write(",".join(cells) + "\n")


def _p0_l2_diff(mesh, a, b, weights=None):
    areas = meshmod.signed_areas(mesh)
    d = np.asarray(a) - np.asarray(b)
    if d.ndim == 1:
        return float(np.sqrt(np.sum(areas * d * d)))
    w = np.asarray(weights, dtype=float)
    return float(np.sqrt(np.sum(areas[:, None] * w[None, :] * d * d)))


def kirchhoff_limit_check(level=3, t_sequence=(1e-1, 1e-2, 1e-3), config=None,
                          quad_degree=16):
    """Distance of the finite-thickness solution to the bending limit t = 0.

    Solves on one mesh for each t in `t_sequence` and for t = 0, and reports
    the elementwise-L2 distances of the deflection and moment fields, which
    must shrink monotonically as t decreases.  Also evaluates the identity
    ||u(t) - u(0)||_L2 = t^2 ||lap phi||_L2 of the closed-form solution, in
    extended precision because the difference is far below the field scale.
    """
    from dataclasses import replace

    if config is None:
        config = dpg.ProblemConfig(t=0.0)
    msh = meshmod.mesh_at_level(level)
    kernels = MeshKernels(msh, config)
    sol0 = assemble_and_solve(msh, replace(config, t=0.0), kernels)
    rows = []
    for t in t_sequence:
        sol = assemble_and_solve(msh, replace(config, t=t), kernels)
        du = _p0_l2_diff(msh, sol.u, sol0.u)
        dM = _p0_l2_diff(msh, sol.M, sol0.M, weights=(1.0, 2.0, 1.0))
        rows.append((float(t), du, dM))

    rule = quadrature.triangle_rule(quad_degree)
    ident_err = 0.0
    for t in t_sequence:
        num = 0.0
        den = 0.0
        for ti in range(msh.num_triangles):
            pts, w = quadrature.map_to_triangle(rule, msh.triangle_coords(ti))
            x = pts[:, 0].astype(np.longdouble)
            y = pts[:, 1].astype(np.longdouble)
            wl = w.astype(np.longdouble)
            ex_t = manufactured.ExactSolution(t)
            ex_0 = manufactured.ExactSolution(0.0)
            diff = ex_t.u(x, y) - ex_0.u(x, y)
            num += float(wl @ (diff * diff))
            lap = manufactured.ExactSolution(0.0).lap_phi(x, y)
            den += float(wl @ (lap * lap))
        lhs = np.sqrt(num)
        rhs = t * t * np.sqrt(den)
        ident_err = max(ident_err, abs(lhs - rhs) / rhs)

    du_seq = [r[1] for r in rows]
    dM_seq = [r[2] for r in rows]
    return {
        "level": level,
        "rows": rows,
        "monotone_u": all(a > b for a, b in zip(du_seq, du_seq[1:])),
        "monotone_M": all(a > b for a, b in zip(dM_seq, dM_seq[1:])),
        "identity_rel_err": float(ident_err),
    }
