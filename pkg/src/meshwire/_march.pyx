# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled surface-marching kernels.

Keep in lockstep with meshwire._march_py: same operations in the same
order so both backends agree to float precision.  See that module for the
conventions (edge i opposite vertex i, crossing emission, vertex nudge).
"""

from libc.math cimport sqrt, INFINITY

cdef double _T_MIN = 1e-14
cdef double _VERTEX_CLEARANCE = 1e-6
cdef int _CONNECT_LIMIT = 64

WALK_OK = 0
WALK_BOUNDARY = 3
ROUTED = 0
FAIL_DEGENERATE = 1
FAIL_MAX_STEPS = 2
FAIL_BOUNDARY = 3


cdef struct WalkState:
    int status
    int face
    double b0, b1, b2
    double dx, dy, dz
    double traveled


cdef struct Tangent:
    bint ok
    double dx, dy, dz


cdef inline void _embed_c(const double[:, ::1] V, const int[:, ::1] F, int face,
                          double b0, double b1, double b2,
                          double* x, double* y, double* z) nogil:
    cdef int i0 = F[face, 0]
    cdef int i1 = F[face, 1]
    cdef int i2 = F[face, 2]
    x[0] = b0 * V[i0, 0] + b1 * V[i1, 0] + b2 * V[i2, 0]
    y[0] = b0 * V[i0, 1] + b1 * V[i1, 1] + b2 * V[i2, 1]
    z[0] = b0 * V[i0, 2] + b1 * V[i1, 2] + b2 * V[i2, 2]


cdef Tangent _tangent_toward_c(const double[:, ::1] V, const int[:, ::1] F,
                               const double[:, ::1] FN, const double[:, ::1] VN,
                               int face, double b0, double b1, double b2,
                               double tx, double ty, double tz,
                               double degen_eps, bint use_vertex_normals) nogil:
    cdef Tangent out
    cdef double px, py, pz, vx, vy, vz, full, nx, ny, nz, nn, dot, dx, dy, dz, tn
    cdef double fnx, fny, fnz
    cdef int i0, i1, i2
    out.ok = False
    out.dx = out.dy = out.dz = 0.0

    _embed_c(V, F, face, b0, b1, b2, &px, &py, &pz)
    vx = tx - px
    vy = ty - py
    vz = tz - pz
    full = sqrt(vx * vx + vy * vy + vz * vz)
    if full < 1e-300:
        return out

    if use_vertex_normals:
        i0 = F[face, 0]
        i1 = F[face, 1]
        i2 = F[face, 2]
        nx = b0 * VN[i0, 0] + b1 * VN[i1, 0] + b2 * VN[i2, 0]
        ny = b0 * VN[i0, 1] + b1 * VN[i1, 1] + b2 * VN[i2, 1]
        nz = b0 * VN[i0, 2] + b1 * VN[i1, 2] + b2 * VN[i2, 2]
        nn = sqrt(nx * nx + ny * ny + nz * nz)
        if nn < 1e-12:
            nx = FN[face, 0]
            ny = FN[face, 1]
            nz = FN[face, 2]
        else:
            nx /= nn
            ny /= nn
            nz /= nn
    else:
        nx = FN[face, 0]
        ny = FN[face, 1]
        nz = FN[face, 2]

    dot = vx * nx + vy * ny + vz * nz
    dx = vx - dot * nx
    dy = vy - dot * ny
    dz = vz - dot * nz
    tn = sqrt(dx * dx + dy * dy + dz * dz)
    if tn < degen_eps * full:
        return out

    fnx = FN[face, 0]
    fny = FN[face, 1]
    fnz = FN[face, 2]
    dot = dx * fnx + dy * fny + dz * fnz
    dx -= dot * fnx
    dy -= dot * fny
    dz -= dot * fnz
    tn = sqrt(dx * dx + dy * dy + dz * dz)
    if tn < degen_eps * full:
        return out
    out.ok = True
    out.dx = dx / tn
    out.dy = dy / tn
    out.dz = dz / tn
    return out


cdef WalkState _walk_c(const double[:, ::1] V, const int[:, ::1] F, const int[:, ::1] FADJ,
                       const double[:, ::1] FN, int face,
                       double b0, double b1, double b2,
                       double dx, double dy, double dz, double distance,
                       list out_faces, list out_barys) except *:
    cdef WalkState st
    cdef double remaining = distance
    cdef double traveled = 0.0
    cdef int entry_edge = -1
    cdef int guard, i0, i1, i2, i_exit, j, k, vj, vk, g, lj, lk, i
    cdef double ax, ay, az, bx, by, bz, cx, cy, cz
    cdef double e1x, e1y, e1z, e2x, e2y, e2z, g11, g12, g22, det, r1, r2, du, dv
    cdef double db0, db1, db2, t_exit, t, s, bj, bk
    cdef double ejx, ejy, ejz, elen, eps_b
    cdef double n1x, n1y, n1z, n2x, n2y, n2z, axx, axy, axz, sin_t, cos_t
    cdef double ex, ey, ez, dd, kx, ky, kz, cx_, cy_, cz_, kd, one_c, dot, dn
    cdef double nb[3]
    cdef double fb[3]
    cdef double gb[3]

    st.status = WALK_OK

    for guard in range(100000):
        i0 = F[face, 0]
        i1 = F[face, 1]
        i2 = F[face, 2]
        ax = V[i0, 0]; ay = V[i0, 1]; az = V[i0, 2]
        bx = V[i1, 0]; by = V[i1, 1]; bz = V[i1, 2]
        cx = V[i2, 0]; cy = V[i2, 1]; cz = V[i2, 2]

        e1x = bx - ax; e1y = by - ay; e1z = bz - az
        e2x = cx - ax; e2y = cy - ay; e2z = cz - az
        g11 = e1x * e1x + e1y * e1y + e1z * e1z
        g12 = e1x * e2x + e1y * e2y + e1z * e2z
        g22 = e2x * e2x + e2y * e2y + e2z * e2z
        det = g11 * g22 - g12 * g12
        if det <= 1e-30:
            raise ValueError(f"degenerate face {face} in walk")
        r1 = dx * e1x + dy * e1y + dz * e1z
        r2 = dx * e2x + dy * e2y + dz * e2z
        du = (g22 * r1 - g12 * r2) / det
        dv = (g11 * r2 - g12 * r1) / det
        db0 = -du - dv
        db1 = du
        db2 = dv

        t_exit = INFINITY
        i_exit = -1
        if db0 < -1e-18 and entry_edge != 0:
            t = -b0 / db0
            if t < t_exit:
                t_exit = t
                i_exit = 0
        if db1 < -1e-18 and entry_edge != 1:
            t = -b1 / db1
            if t < t_exit:
                t_exit = t
                i_exit = 1
        if db2 < -1e-18 and entry_edge != 2:
            t = -b2 / db2
            if t < t_exit:
                t_exit = t
                i_exit = 2

        if i_exit < 0 or t_exit >= remaining:
            b0 += remaining * db0
            b1 += remaining * db1
            b2 += remaining * db2
            if b0 < 0.0:
                b0 = 0.0
            if b1 < 0.0:
                b1 = 0.0
            if b2 < 0.0:
                b2 = 0.0
            s = b0 + b1 + b2
            b0 /= s; b1 /= s; b2 /= s
            out_faces.append(face)
            out_barys.append((b0, b1, b2))
            st.status = WALK_OK
            st.face = face
            st.b0 = b0; st.b1 = b1; st.b2 = b2
            st.dx = dx; st.dy = dy; st.dz = dz
            st.traveled = distance
            return st

        nb[0] = b0 + t_exit * db0
        nb[1] = b1 + t_exit * db1
        nb[2] = b2 + t_exit * db2
        nb[i_exit] = 0.0
        j = (i_exit + 1) % 3
        k = (i_exit + 2) % 3
        bj = nb[j]
        bk = nb[k]
        if bj < 0.0:
            bj = 0.0
        if bk < 0.0:
            bk = 0.0
        s = bj + bk
        if s <= 0.0:
            bj = bk = 0.5
        else:
            bj /= s
            bk /= s

        vj = F[face, j]
        vk = F[face, k]
        ejx = V[vk, 0] - V[vj, 0]
        ejy = V[vk, 1] - V[vj, 1]
        ejz = V[vk, 2] - V[vj, 2]
        elen = sqrt(ejx * ejx + ejy * ejy + ejz * ejz)
        eps_b = _VERTEX_CLEARANCE / elen
        if eps_b > 0.25:
            eps_b = 0.25
        if bj < eps_b:
            bj = eps_b
            bk = 1.0 - eps_b
        elif bk < eps_b:
            bk = eps_b
            bj = 1.0 - eps_b

        traveled += t_exit
        remaining -= t_exit

        g = FADJ[face, i_exit]
        if g < 0:
            fb[0] = 0.0; fb[1] = 0.0; fb[2] = 0.0
            fb[j] = bj
            fb[k] = bk
            out_faces.append(face)
            out_barys.append((fb[0], fb[1], fb[2]))
            st.status = WALK_BOUNDARY
            st.face = face
            st.b0 = fb[0]; st.b1 = fb[1]; st.b2 = fb[2]
            st.dx = dx; st.dy = dy; st.dz = dz
            st.traveled = traveled
            return st

        n1x = FN[face, 0]; n1y = FN[face, 1]; n1z = FN[face, 2]
        n2x = FN[g, 0]; n2y = FN[g, 1]; n2z = FN[g, 2]
        axx = n1y * n2z - n1z * n2y
        axy = n1z * n2x - n1x * n2z
        axz = n1x * n2y - n1y * n2x
        sin_t = sqrt(axx * axx + axy * axy + axz * axz)
        cos_t = n1x * n2x + n1y * n2y + n1z * n2z
        if sin_t < 1e-12:
            if cos_t < 0.0:
                ex = ejx / elen; ey = ejy / elen; ez = ejz / elen
                dd = dx * ex + dy * ey + dz * ez
                dx = 2.0 * dd * ex - dx
                dy = 2.0 * dd * ey - dy
                dz = 2.0 * dd * ez - dz
        else:
            kx = axx / sin_t; ky = axy / sin_t; kz = axz / sin_t
            cx_ = ky * dz - kz * dy
            cy_ = kz * dx - kx * dz
            cz_ = kx * dy - ky * dx
            kd = kx * dx + ky * dy + kz * dz
            one_c = 1.0 - cos_t
            dx = dx * cos_t + cx_ * sin_t + kx * kd * one_c
            dy = dy * cos_t + cy_ * sin_t + ky * kd * one_c
            dz = dz * cos_t + cz_ * sin_t + kz * kd * one_c

        dot = dx * n2x + dy * n2y + dz * n2z
        dx -= dot * n2x
        dy -= dot * n2y
        dz -= dot * n2z
        dn = sqrt(dx * dx + dy * dy + dz * dz)
        if dn < 1e-12:
            raise ValueError("tangent direction lost during transport")
        dx /= dn; dy /= dn; dz /= dn

        lj = -1
        lk = -1
        for i in range(3):
            if F[g, i] == vj:
                lj = i
            elif F[g, i] == vk:
                lk = i
        if lj < 0 or lk < 0:
            raise ValueError(f"adjacency mismatch between faces {face} and {g}")
        gb[0] = 0.0; gb[1] = 0.0; gb[2] = 0.0
        gb[lj] = bj
        gb[lk] = bk
        face = g
        b0 = gb[0]; b1 = gb[1]; b2 = gb[2]
        entry_edge = 3 - lj - lk
        out_faces.append(face)
        out_barys.append((b0, b1, b2))
        if remaining <= 1e-12:
            st.status = WALK_OK
            st.face = face
            st.b0 = b0; st.b1 = b1; st.b2 = b2
            st.dx = dx; st.dy = dy; st.dz = dz
            st.traveled = traveled
            return st

    raise RuntimeError("walk exceeded its crossing budget")


cdef tuple _mini_walk_toward_c(const double[:, ::1] V, const int[:, ::1] F, const int[:, ::1] FADJ,
                               const double[:, ::1] FN, const double[:, ::1] VN,
                               int sf, double sb0, double sb1, double sb2,
                               int df, double db0, double db1, double db2,
                               double step, double degen_eps,
                               bint use_vertex_normals):
    cdef list faces = []
    cdef list barys = []
    cdef double total = 0.0
    cdef int f = sf
    cdef double b0 = sb0, b1 = sb1, b2 = sb2
    cdef double tx, ty, tz, sx, sy, sz, ex, ey, ez, dist, adv
    cdef double last_dist = INFINITY
    cdef Tangent tg
    cdef WalkState ws
    cdef int it

    _embed_c(V, F, df, db0, db1, db2, &tx, &ty, &tz)
    for it in range(_CONNECT_LIMIT):
        _embed_c(V, F, f, b0, b1, b2, &sx, &sy, &sz)
        ex = tx - sx; ey = ty - sy; ez = tz - sz
        dist = sqrt(ex * ex + ey * ey + ez * ez)
        if f == df:
            return (faces, barys, total + dist)
        if dist >= last_dist - 1e-12:
            return None
        last_dist = dist
        tg = _tangent_toward_c(V, F, FN, VN, f, b0, b1, b2, tx, ty, tz,
                               degen_eps, use_vertex_normals)
        if not tg.ok:
            return None
        adv = step if step < dist else dist
        ws = _walk_c(V, F, FADJ, FN, f, b0, b1, b2, tg.dx, tg.dy, tg.dz, adv,
                     faces, barys)
        f = ws.face
        b0 = ws.b0; b1 = ws.b1; b2 = ws.b2
        total += ws.traveled
        if ws.status == WALK_BOUNDARY:
            return None
    return None


cdef tuple _connect_c(const double[:, ::1] V, const int[:, ::1] F, const int[:, ::1] FADJ,
                      const double[:, ::1] FN, const double[:, ::1] VN,
                      int pf, double pb0, double pb1, double pb2,
                      int qf, double qb0, double qb1, double qb2,
                      double dist, double step, double degen_eps,
                      bint use_vertex_normals):
    if dist <= 1e-9 or pf == qf:
        return (True, [], [])
    ca = _mini_walk_toward_c(V, F, FADJ, FN, VN, pf, pb0, pb1, pb2,
                             qf, qb0, qb1, qb2, step, degen_eps,
                             use_vertex_normals)
    cb = _mini_walk_toward_c(V, F, FADJ, FN, VN, qf, qb0, qb1, qb2,
                             pf, pb0, pb1, pb2, step, degen_eps,
                             use_vertex_normals)
    if ca is None and cb is None:
        return (False, [], [])
    if cb is None or (ca is not None and ca[2] <= cb[2]):
        return (True, ca[0], ca[1])
    faces = list(reversed(cb[0]))
    barys = list(reversed(cb[1]))
    return (True, faces, barys)


def march(const double[:, ::1] V, const int[:, ::1] F, const int[:, ::1] FADJ,
          const double[:, ::1] FN, const double[:, ::1] VN,
          int pf, double pb0, double pb1, double pb2,
          int qf, double qb0, double qb1, double qb2,
          double step, int max_steps, double meet_tol, double degen_eps,
          bint use_vertex_normals):
    """Two-front trace march; see the Python twin for semantics."""
    cdef list p_faces = [pf]
    cdef list p_barys = [(pb0, pb1, pb2)]
    cdef list q_faces = [qf]
    cdef list q_barys = [(qb0, qb1, qb2)]
    cdef int steps = 0
    cdef int turn = 0
    cdef int status = ROUTED
    cdef double px, py, pz, qx, qy, qz, ex, ey, ez, dist, adv
    cdef bint force_short
    cdef Tangent tg
    cdef WalkState ws
    conn_faces = None
    conn_barys = None

    while True:
        _embed_c(V, F, pf, pb0, pb1, pb2, &px, &py, &pz)
        _embed_c(V, F, qf, qb0, qb1, qb2, &qx, &qy, &qz)
        ex = qx - px; ey = qy - py; ez = qz - pz
        dist = sqrt(ex * ex + ey * ey + ez * ez)

        force_short = False
        if dist <= meet_tol:
            ok, conn_faces, conn_barys = _connect_c(
                V, F, FADJ, FN, VN, pf, pb0, pb1, pb2, qf, qb0, qb1, qb2,
                dist, step, degen_eps, use_vertex_normals)
            if ok:
                break
            force_short = True

        if steps >= max_steps:
            status = FAIL_MAX_STEPS
            break

        adv = step
        if force_short and dist < step:
            adv = dist
        if turn == 0:
            tg = _tangent_toward_c(V, F, FN, VN, pf, pb0, pb1, pb2,
                                   qx, qy, qz, degen_eps, use_vertex_normals)
            if not tg.ok:
                status = FAIL_DEGENERATE
                break
            ws = _walk_c(V, F, FADJ, FN, pf, pb0, pb1, pb2,
                         tg.dx, tg.dy, tg.dz, adv, p_faces, p_barys)
            pf = ws.face
            pb0 = ws.b0; pb1 = ws.b1; pb2 = ws.b2
        else:
            tg = _tangent_toward_c(V, F, FN, VN, qf, qb0, qb1, qb2,
                                   px, py, pz, degen_eps, use_vertex_normals)
            if not tg.ok:
                status = FAIL_DEGENERATE
                break
            ws = _walk_c(V, F, FADJ, FN, qf, qb0, qb1, qb2,
                         tg.dx, tg.dy, tg.dz, adv, q_faces, q_barys)
            qf = ws.face
            qb0 = ws.b0; qb1 = ws.b1; qb2 = ws.b2
        if ws.status == WALK_BOUNDARY:
            status = FAIL_BOUNDARY
            break
        steps += 1
        turn = 1 - turn

    if status != ROUTED:
        return status, [], []
    q_faces.reverse()
    q_barys.reverse()
    faces = p_faces + conn_faces + q_faces
    barys = p_barys + conn_barys + q_barys
    return ROUTED, faces, barys


def walk(const double[:, ::1] V, const int[:, ::1] F, const int[:, ::1] FADJ, const double[:, ::1] FN,
         int face, double b0, double b1, double b2,
         double dx, double dy, double dz, double distance):
    """Single transported walk; public kernel entry."""
    cdef list out_faces = []
    cdef list out_barys = []
    cdef WalkState ws = _walk_c(V, F, FADJ, FN, face, b0, b1, b2,
                                dx, dy, dz, distance, out_faces, out_barys)
    return (ws.status, ws.face, (ws.b0, ws.b1, ws.b2),
            (ws.dx, ws.dy, ws.dz), ws.traveled, out_faces, out_barys)
