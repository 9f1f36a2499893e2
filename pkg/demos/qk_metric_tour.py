"""
From HK to QK: two ways to the same metric
===========================================

The QK metric on the slice Arg z0 = 0 can be computed from the HK data
through the circle bundle, or directly from closed-form coordinate
expressions. Both agree, and they collapse to Ferrara-Sabharwal at Omega = 0.
"""
import numpy as np

from qkinst import BpsStructure, QkPoint, chn_domain
from qkinst.bundle import bundle_data, qk_metric_global, region_classify
from qkinst.chart import slice_geometry
from qkinst.coord import fs_metric, isometry_residual, qk_metric_coord

dom = chn_domain(1, c=0.2, K=0.25)
bps = BpsStructure([((0, 0, 1, 0), 1), ((0, 0, 1, 1), 1)])
q = QkPoint(2.0, [0.2 - 0.1j], [0.3, 1.1], [0.7, 2.0], 0.4)

g_coord = qk_metric_coord(dom, bps, q).matrix
g_glob = qk_metric_global(dom, bps, q).matrix
print("coordinate vs global path:", np.abs(g_coord - g_glob).max())

g_tree = qk_metric_coord(dom, BpsStructure([]), q).matrix
print("Omega = 0 vs Ferrara-Sabharwal:", np.abs(g_tree - fs_metric(dom, q).matrix).max())

# region and positivity along rho
for rho in (1.0, 3.0, 10.0):
    qq = QkPoint(rho, q.X, q.theta_tilde, q.theta, q.sigma)
    sg = slice_geometry(dom, qq)
    label, (f, f1, _) = region_classify(bundle_data(dom, bps, sg.torus_point()))
    ev = np.linalg.eigvalsh(qk_metric_coord(dom, bps, qq).matrix)
    print(f"rho = {rho:4.1f}  {label:7s}  f = {f:7.3f}  f1 = {f1:7.3f}  min eig = {ev[0]:.3e}")

# Heisenberg translations: theta0 by 2 pi survives, theta0 by pi does not
z = np.zeros(2)
e0 = np.array([2 * np.pi, 0.0])
print("theta0 -> theta0 + 2pi:", isometry_residual(dom, bps, q, (z, e0, 0.0)))
print("theta0 -> theta0 + pi: ", isometry_residual(dom, bps, q, (z, e0 / 2, 0.0)))
