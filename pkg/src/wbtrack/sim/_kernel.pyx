# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loop: fused PD control, forward kinematics, penalty contact
and semi-implicit Euler integration over the substeps of one policy step.

Mirrors wbtrack.sim.physics.advance_python; the two backends are checked
against each other in the test suite.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, isfinite

cnp.import_array()

DEF MAX_J = 40
DEF MAX_C = 12

GRAVITY = 9.81

cdef double _G = 9.81
cdef double _KN = 2.0e5
cdef double _DN = 2.0e3
cdef double _KT = 2.0e3
cdef double _CONTACT_EPS = 1e-4
cdef double _LIMIT_SPRING = 200.0


cdef inline void _quat_to_mat(double* q, double* R) nogil:
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    R[0] = 1 - 2 * (y * y + z * z); R[1] = 2 * (x * y - w * z); R[2] = 2 * (x * z + w * y)
    R[3] = 2 * (x * y + w * z); R[4] = 1 - 2 * (x * x + z * z); R[5] = 2 * (y * z - w * x)
    R[6] = 2 * (x * z - w * y); R[7] = 2 * (y * z + w * x); R[8] = 1 - 2 * (x * x + y * y)


cdef inline void _axis_rot(double ax, double ay, double az, double q, double* R) nogil:
    # Rodrigues: I + s K + (1-c) K^2 for unit axis (ax, ay, az)
    cdef double c = cos(q), s = sin(q), t = 1.0 - c
    R[0] = c + t * ax * ax; R[1] = t * ax * ay - s * az; R[2] = t * ax * az + s * ay
    R[3] = t * ax * ay + s * az; R[4] = c + t * ay * ay; R[5] = t * ay * az - s * ax
    R[6] = t * ax * az - s * ay; R[7] = t * ay * az + s * ax; R[8] = c + t * az * az


cdef inline void _matmul3(double* A, double* B, double* C) nogil:
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            C[3 * i + j] = 0.0
            for k in range(3):
                C[3 * i + j] += A[3 * i + k] * B[3 * k + j]


cdef inline void _matvec3(double* A, double* v, double* out) nogil:
    cdef int i
    for i in range(3):
        out[i] = A[3 * i] * v[0] + A[3 * i + 1] * v[1] + A[3 * i + 2] * v[2]


def advance(
    cnp.int32_t[::1] parent,
    double[:, ::1] axis,
    double[:, ::1] offset,
    double[::1] q_min,
    double[::1] q_max,
    double[::1] torque_limit,
    double[::1] joint_inertia,
    double[::1] kp,
    double[::1] kd,
    cnp.int32_t[::1] contact_joint,
    double[:, ::1] contact_offset,
    cnp.int32_t[::1] contact_foot,
    double total_mass,
    double rot_inertia,
    double[:, ::1] root_pos,
    double[:, ::1] root_quat,
    double[:, ::1] root_lin_vel,
    double[:, ::1] root_ang_vel,
    double[:, ::1] dof_pos,
    double[:, ::1] dof_vel,
    double[:, ::1] last_torques,
    cnp.uint8_t[:, ::1] foot_contact,
    double[:, :, ::1] foot_force,
    double[:, ::1] air_time,
    double[:, ::1] landed_air_time,
    double[::1] sim_time,
    double[:, :, ::1] prev_contact_pos,
    double[:, ::1] targets,
    double[::1] friction,
    double[:, ::1] motor_scale,
    int n_substeps,
    double dt,
    double[:, ::1] landed_accum,
):
    cdef int N = root_pos.shape[0]
    cdef int J = dof_pos.shape[1]
    cdef int C = contact_joint.shape[0]
    cdef int n, sub, j, c, i, p, f
    cdef double jp[MAX_J][3]
    cdef double jr[MAX_J][9]
    cdef double R0[9]
    cdef double Rloc[9]
    cdef double tmp3[3]
    cdef double cp[MAX_C][3]
    cdef double fcx[MAX_C]
    cdef double fcy[MAX_C]
    cdef double fcz[MAX_C]
    cdef double tau[MAX_J]
    cdef double vx, vy, vz, pen, fz, ftx, fty, ftn, cap, scl
    cdef double Fx, Fy, Fz, Tx, Ty, Tz, rx, ry, rz
    cdef double wdt_x, wdt_y, wdt_z, ang, half, sh, qw, qx, qy, qz, nrm
    cdef double over, under, tj
    cdef int contact_now[2]
    cdef int contact_prev[2]
    cdef double ff[2][3]
    cdef int fault = 0

    if J > MAX_J or C > MAX_C:
        raise ValueError("model exceeds kernel limits")

    for n in range(N):
        for sub in range(n_substeps):
            # PD torques from the current joint state
            for j in range(J):
                tj = motor_scale[n, j] * (
                    kp[j] * (targets[n, j] - dof_pos[n, j]) - kd[j] * dof_vel[n, j]
                )
                if tj > torque_limit[j]:
                    tj = torque_limit[j]
                elif tj < -torque_limit[j]:
                    tj = -torque_limit[j]
                tau[j] = tj

            # forward kinematics
            _quat_to_mat(&root_quat[n, 0], R0)
            for j in range(J):
                p = parent[j]
                if p < 0:
                    _matvec3(R0, &offset[j, 0], tmp3)
                    for i in range(3):
                        jp[j][i] = root_pos[n, i] + tmp3[i]
                    _axis_rot(axis[j, 0], axis[j, 1], axis[j, 2], dof_pos[n, j], Rloc)
                    _matmul3(R0, Rloc, jr[j])
                else:
                    _matvec3(jr[p], &offset[j, 0], tmp3)
                    for i in range(3):
                        jp[j][i] = jp[p][i] + tmp3[i]
                    _axis_rot(axis[j, 0], axis[j, 1], axis[j, 2], dof_pos[n, j], Rloc)
                    _matmul3(jr[p], Rloc, jr[j])

            # contact forces
            Fx = Fy = 0.0
            Fz = -total_mass * _G
            Tx = Ty = Tz = 0.0
            contact_now[0] = contact_now[1] = 0
            for f in range(2):
                for i in range(3):
                    ff[f][i] = 0.0
            for c in range(C):
                j = contact_joint[c]
                _matvec3(jr[j], &contact_offset[c, 0], tmp3)
                for i in range(3):
                    cp[c][i] = jp[j][i] + tmp3[i]
                vx = (cp[c][0] - prev_contact_pos[n, c, 0]) / dt
                vy = (cp[c][1] - prev_contact_pos[n, c, 1]) / dt
                vz = (cp[c][2] - prev_contact_pos[n, c, 2]) / dt
                pen = -cp[c][2]
                if pen > 0.0:
                    fz = _KN * pen - _DN * vz
                    if fz < 0.0:
                        fz = 0.0
                else:
                    fz = 0.0
                ftx = -_KT * vx
                fty = -_KT * vy
                ftn = sqrt(ftx * ftx + fty * fty)
                cap = friction[n] * fz
                if ftn > cap:
                    scl = cap / (ftn if ftn > 1e-12 else 1e-12)
                    ftx *= scl
                    fty *= scl
                fcx[c] = ftx
                fcy[c] = fty
                fcz[c] = fz
                if cp[c][2] < _CONTACT_EPS:
                    contact_now[contact_foot[c]] = 1
                f = contact_foot[c]
                ff[f][0] += ftx
                ff[f][1] += fty
                ff[f][2] += fz
                Fx += ftx
                Fy += fty
                Fz += fz
                rx = cp[c][0] - root_pos[n, 0]
                ry = cp[c][1] - root_pos[n, 1]
                rz = cp[c][2] - root_pos[n, 2]
                Tx += ry * fz - rz * fty
                Ty += rz * ftx - rx * fz
                Tz += rx * fty - ry * ftx

            # base integration (semi-implicit)
            root_lin_vel[n, 0] += Fx / total_mass * dt
            root_lin_vel[n, 1] += Fy / total_mass * dt
            root_lin_vel[n, 2] += Fz / total_mass * dt
            root_ang_vel[n, 0] += Tx / rot_inertia * dt
            root_ang_vel[n, 1] += Ty / rot_inertia * dt
            root_ang_vel[n, 2] += Tz / rot_inertia * dt
            for i in range(3):
                root_pos[n, i] += root_lin_vel[n, i] * dt

            wdt_x = root_ang_vel[n, 0] * dt
            wdt_y = root_ang_vel[n, 1] * dt
            wdt_z = root_ang_vel[n, 2] * dt
            ang = sqrt(wdt_x * wdt_x + wdt_y * wdt_y + wdt_z * wdt_z)
            if ang < 1e-12:
                qw = 1.0; qx = 0.0; qy = 0.0; qz = 0.0
            else:
                half = 0.5 * ang
                sh = sin(half) / ang
                qw = cos(half); qx = wdt_x * sh; qy = wdt_y * sh; qz = wdt_z * sh
            # q_new = dq * q, then normalize
            tmp3[0] = qw * root_quat[n, 0] - qx * root_quat[n, 1] - qy * root_quat[n, 2] - qz * root_quat[n, 3]
            vx = qw * root_quat[n, 1] + qx * root_quat[n, 0] + qy * root_quat[n, 3] - qz * root_quat[n, 2]
            vy = qw * root_quat[n, 2] - qx * root_quat[n, 3] + qy * root_quat[n, 0] + qz * root_quat[n, 1]
            vz = qw * root_quat[n, 3] + qx * root_quat[n, 2] - qy * root_quat[n, 1] + qz * root_quat[n, 0]
            nrm = sqrt(tmp3[0] * tmp3[0] + vx * vx + vy * vy + vz * vz)
            root_quat[n, 0] = tmp3[0] / nrm
            root_quat[n, 1] = vx / nrm
            root_quat[n, 2] = vy / nrm
            root_quat[n, 3] = vz / nrm

            # joint integration with soft limits
            for j in range(J):
                over = dof_pos[n, j] - q_max[j]
                if over < 0.0:
                    over = 0.0
                under = q_min[j] - dof_pos[n, j]
                if under < 0.0:
                    under = 0.0
                tj = tau[j] + _LIMIT_SPRING * (under - over)
                dof_vel[n, j] += tj / joint_inertia[j] * dt
                dof_pos[n, j] += dof_vel[n, j] * dt
                last_torques[n, j] = tau[j]

            # contact flags, forces and air-time bookkeeping
            for f in range(2):
                contact_prev[f] = foot_contact[n, f]
                foot_contact[n, f] = <cnp.uint8_t>contact_now[f]
                for i in range(3):
                    foot_force[n, f, i] = ff[f][i]
                if contact_now[f]:
                    if not contact_prev[f]:
                        landed_air_time[n, f] = air_time[n, f] + dt
                        landed_accum[n, f] += landed_air_time[n, f]
                    else:
                        landed_air_time[n, f] = 0.0
                    air_time[n, f] = 0.0
                else:
                    landed_air_time[n, f] = 0.0
                    air_time[n, f] += dt

            for c in range(C):
                for i in range(3):
                    prev_contact_pos[n, c, i] = cp[c][i]
            sim_time[n] += dt

        for i in range(3):
            if not isfinite(root_pos[n, i]) or not isfinite(root_lin_vel[n, i]) or not isfinite(root_ang_vel[n, i]):
                fault = 1
        for i in range(4):
            if not isfinite(root_quat[n, i]):
                fault = 1
        for j in range(J):
            if not isfinite(dof_pos[n, j]) or not isfinite(dof_vel[n, j]):
                fault = 1

    return fault
