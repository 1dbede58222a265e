"""Pure-Python fallback for the surface-marching kernels.

Mirrors ``meshwire._march`` (the compiled build) operation for operation so
the two backends agree to float precision; any change here must be copied
there.  Scalar math only in the inner loops.

Conventions shared with the compiled kernel:

- edge ``i`` of a face is opposite local vertex ``i``;
- a walk emits one sample per edge crossing (expressed on the face being
  entered) plus the final point, never the start point;
- crossings landing within 1e-6 mm of a mesh vertex are nudged that far
  along the edge, so walks never sit exactly on a vertex.
"""

import math

WALK_OK = 0
WALK_BOUNDARY = 3

ROUTED = 0
FAIL_DEGENERATE = 1
FAIL_MAX_STEPS = 2
FAIL_BOUNDARY = 3

_T_MIN = 1e-14            # reject re-crossing an edge at parameter ~ 0
_VERTEX_CLEARANCE = 1e-6  # mm of nudge away from vertex hits
_CONNECT_LIMIT = 64       # walk segments allowed when joining met fronts


def _embed(V, F, face, b0, b1, b2):
    i0 = F[face, 0]
    i1 = F[face, 1]
    i2 = F[face, 2]
    x = b0 * V[i0, 0] + b1 * V[i1, 0] + b2 * V[i2, 0]
    y = b0 * V[i0, 1] + b1 * V[i1, 1] + b2 * V[i2, 1]
    z = b0 * V[i0, 2] + b1 * V[i1, 2] + b2 * V[i2, 2]
    return x, y, z


def _tangent_toward(V, F, FN, VN, face, b0, b1, b2, tx, ty, tz,
                    degen_eps, use_vertex_normals):
    """Unit in-plane direction from a surface point toward a 3D target.

    Returns (ok, dx, dy, dz); ok is False when the offset is numerically
    parallel to the surface normal.
    """
    px, py, pz = _embed(V, F, face, b0, b1, b2)
    vx = tx - px
    vy = ty - py
    vz = tz - pz
    full = math.sqrt(vx * vx + vy * vy + vz * vz)
    if full < 1e-300:
        return False, 0.0, 0.0, 0.0

    if use_vertex_normals:
        i0 = F[face, 0]
        i1 = F[face, 1]
        i2 = F[face, 2]
        nx = b0 * VN[i0, 0] + b1 * VN[i1, 0] + b2 * VN[i2, 0]
        ny = b0 * VN[i0, 1] + b1 * VN[i1, 1] + b2 * VN[i2, 1]
        nz = b0 * VN[i0, 2] + b1 * VN[i1, 2] + b2 * VN[i2, 2]
        nn = math.sqrt(nx * nx + ny * ny + nz * nz)
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
    tn = math.sqrt(dx * dx + dy * dy + dz * dz)
    if tn < degen_eps * full:
        return False, 0.0, 0.0, 0.0

    fnx = FN[face, 0]
    fny = FN[face, 1]
    fnz = FN[face, 2]
    dot = dx * fnx + dy * fny + dz * fnz
    dx -= dot * fnx
    dy -= dot * fny
    dz -= dot * fnz
    tn = math.sqrt(dx * dx + dy * dy + dz * dz)
    if tn < degen_eps * full:
        return False, 0.0, 0.0, 0.0
    return True, dx / tn, dy / tn, dz / tn


def _walk(V, F, FADJ, FN, face, b0, b1, b2, dx, dy, dz, distance,
          out_faces, out_barys):
    """Advance ``distance`` mm along the surface from one point.

    Crossing an edge rotates the direction by the dihedral angle (the
    minimal rotation taking the current face normal to the next), then
    re-projects it into the new face plane.  Returns
    (status, face, b0, b1, b2, dx, dy, dz, traveled).
    """
    remaining = distance
    traveled = 0.0
    entry_edge = -1

    for _ in range(100000):
        i0 = F[face, 0]
        i1 = F[face, 1]
        i2 = F[face, 2]
        ax = V[i0, 0]; ay = V[i0, 1]; az = V[i0, 2]
        bx = V[i1, 0]; by = V[i1, 1]; bz = V[i1, 2]
        cx = V[i2, 0]; cy = V[i2, 1]; cz = V[i2, 2]

        # direction in barycentric-velocity form (components sum to zero)
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

        # earliest edge exit; skip the edge just crossed at parameter ~ 0
        t_exit = math.inf
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
            return WALK_OK, face, b0, b1, b2, dx, dy, dz, distance

        # crossing point on edge i_exit (opposite vertex i_exit)
        nb = [b0 + t_exit * db0, b1 + t_exit * db1, b2 + t_exit * db2]
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
        elen = math.sqrt(ejx * ejx + ejy * ejy + ejz * ejz)
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
            fb = [0.0, 0.0, 0.0]
            fb[j] = bj
            fb[k] = bk
            out_faces.append(face)
            out_barys.append((fb[0], fb[1], fb[2]))
            return (WALK_BOUNDARY, face, fb[0], fb[1], fb[2],
                    dx, dy, dz, traveled)

        # transport the direction: minimal rotation n1 -> n2
        n1x = FN[face, 0]; n1y = FN[face, 1]; n1z = FN[face, 2]
        n2x = FN[g, 0]; n2y = FN[g, 1]; n2z = FN[g, 2]
        axx = n1y * n2z - n1z * n2y
        axy = n1z * n2x - n1x * n2z
        axz = n1x * n2y - n1y * n2x
        sin_t = math.sqrt(axx * axx + axy * axy + axz * axz)
        cos_t = n1x * n2x + n1y * n2y + n1z * n2z
        if sin_t < 1e-12:
            if cos_t < 0.0:
                # fully folded crease: reflect through the edge direction
                ex = ejx / elen; ey = ejy / elen; ez = ejz / elen
                dd = dx * ex + dy * ey + dz * ez
                dx = 2.0 * dd * ex - dx
                dy = 2.0 * dd * ey - dy
                dz = 2.0 * dd * ez - dz
            # else coplanar: direction carries over unchanged
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
        dn = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dn < 1e-12:
            raise ValueError("tangent direction lost during transport")
        dx /= dn; dy /= dn; dz /= dn

        # same point, expressed on the entered face (exact index carry-over)
        lj = -1
        lk = -1
        for i in range(3):
            if F[g, i] == vj:
                lj = i
            elif F[g, i] == vk:
                lk = i
        if lj < 0 or lk < 0:
            raise ValueError(f"adjacency mismatch between faces {face} and {g}")
        gb = [0.0, 0.0, 0.0]
        gb[lj] = bj
        gb[lk] = bk
        face = g
        b0, b1, b2 = gb[0], gb[1], gb[2]
        entry_edge = 3 - lj - lk
        out_faces.append(face)
        out_barys.append((b0, b1, b2))
        if remaining <= 1e-12:
            return WALK_OK, face, b0, b1, b2, dx, dy, dz, traveled

    raise RuntimeError("walk exceeded its crossing budget")


def _mini_walk_toward(V, F, FADJ, FN, VN, sf, sb0, sb1, sb2,
                      df, db0, db1, db2, step, degen_eps, use_vertex_normals):
    """Short march from one met front toward the other; used to realize the
    joining arc.  Returns (faces, barys, length) or None when it fails."""
    faces = []
    barys = []
    total = 0.0
    f, b0, b1, b2 = sf, sb0, sb1, sb2
    tx, ty, tz = _embed(V, F, df, db0, db1, db2)
    last_dist = math.inf
    for _ in range(_CONNECT_LIMIT):
        sx, sy, sz = _embed(V, F, f, b0, b1, b2)
        ex = tx - sx; ey = ty - sy; ez = tz - sz
        dist = math.sqrt(ex * ex + ey * ey + ez * ez)
        if f == df:
            return faces, barys, total + dist
        if dist >= last_dist - 1e-12:
            return None
        last_dist = dist
        ok, dx, dy, dz = _tangent_toward(
            V, F, FN, VN, f, b0, b1, b2, tx, ty, tz, degen_eps, use_vertex_normals
        )
        if not ok:
            return None
        adv = step if step < dist else dist
        st, f, b0, b1, b2, dx, dy, dz, tr = _walk(
            V, F, FADJ, FN, f, b0, b1, b2, dx, dy, dz, adv, faces, barys
        )
        total += tr
        if st == WALK_BOUNDARY:
            return None
    return None


def _connect(V, F, FADJ, FN, VN, pf, pb0, pb1, pb2, qf, qb0, qb1, qb2,
             dist, step, degen_eps, use_vertex_normals):
    """Join two fronts within meet tolerance.  Returns (ok, faces, barys)
    where the samples run from the p side to the q side, exclusive."""
    if dist <= 1e-9 or pf == qf:
        return True, [], []
    ca = _mini_walk_toward(V, F, FADJ, FN, VN, pf, pb0, pb1, pb2,
                           qf, qb0, qb1, qb2, step, degen_eps, use_vertex_normals)
    cb = _mini_walk_toward(V, F, FADJ, FN, VN, qf, qb0, qb1, qb2,
                           pf, pb0, pb1, pb2, step, degen_eps, use_vertex_normals)
    if ca is None and cb is None:
        return False, [], []
    if cb is None or (ca is not None and ca[2] <= cb[2]):
        return True, ca[0], ca[1]
    faces = list(reversed(cb[0]))
    barys = list(reversed(cb[1]))
    return True, faces, barys


def march(V, F, FADJ, FN, VN, pf, pb0, pb1, pb2, qf, qb0, qb1, qb2,
          step, max_steps, meet_tol, degen_eps, use_vertex_normals):
    """Two-front trace march between two surface points.

    Fronts alternate 1-step advances, each aimed at the other's current
    position projected to its own tangent plane.  Returns
    (status, faces, barys); samples are populated only for status ROUTED.
    """
    p_faces = [pf]
    p_barys = [(pb0, pb1, pb2)]
    q_faces = [qf]
    q_barys = [(qb0, qb1, qb2)]
    steps = 0
    turn = 0
    conn_faces = None
    conn_barys = None
    status = ROUTED

    while True:
        px, py, pz = _embed(V, F, pf, pb0, pb1, pb2)
        qx, qy, qz = _embed(V, F, qf, qb0, qb1, qb2)
        ex = qx - px; ey = qy - py; ez = qz - pz
        dist = math.sqrt(ex * ex + ey * ey + ez * ez)

        force_short = False
        if dist <= meet_tol:
            ok, conn_faces, conn_barys = _connect(
                V, F, FADJ, FN, VN, pf, pb0, pb1, pb2, qf, qb0, qb1, qb2,
                dist, step, degen_eps, use_vertex_normals
            )
            if ok:
                break
            # fronts met by chord but could not be joined: keep closing in
            force_short = True

        if steps >= max_steps:
            status = FAIL_MAX_STEPS
            break

        adv = step
        if force_short and dist < step:
            adv = dist
        if turn == 0:
            ok, dx, dy, dz = _tangent_toward(
                V, F, FN, VN, pf, pb0, pb1, pb2, qx, qy, qz,
                degen_eps, use_vertex_normals
            )
            if not ok:
                status = FAIL_DEGENERATE
                break
            st, pf, pb0, pb1, pb2, dx, dy, dz, _tr = _walk(
                V, F, FADJ, FN, pf, pb0, pb1, pb2, dx, dy, dz, adv,
                p_faces, p_barys
            )
        else:
            ok, dx, dy, dz = _tangent_toward(
                V, F, FN, VN, qf, qb0, qb1, qb2, px, py, pz,
                degen_eps, use_vertex_normals
            )
            if not ok:
                status = FAIL_DEGENERATE
                break
            st, qf, qb0, qb1, qb2, dx, dy, dz, _tr = _walk(
                V, F, FADJ, FN, qf, qb0, qb1, qb2, dx, dy, dz, adv,
                q_faces, q_barys
            )
        if st == WALK_BOUNDARY:
            status = FAIL_BOUNDARY
            break
        steps += 1
        turn = 1 - turn

    if status != ROUTED:
        return status, [], []
    faces = p_faces + conn_faces + list(reversed(q_faces))
    barys = p_barys + conn_barys + list(reversed(q_barys))
    return ROUTED, faces, barys


def walk(V, F, FADJ, FN, face, b0, b1, b2, dx, dy, dz, distance):
    """Single transported walk; public kernel entry.

    Returns (status, face, (b0, b1, b2), (dx, dy, dz), traveled, faces, barys).
    """
    out_faces = []
    out_barys = []
    st, f, b0, b1, b2, dx, dy, dz, tr = _walk(
        V, F, FADJ, FN, face, b0, b1, b2, dx, dy, dz, distance,
        out_faces, out_barys
    )
    return st, f, (b0, b1, b2), (dx, dy, dz), tr, out_faces, out_barys
