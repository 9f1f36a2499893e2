"""
Universal hypermultiplet with instantons
=========================================

For n = 0 the QK metric is four-dimensional and cheap enough to
differentiate twice, so we can watch it be Einstein with lambda = -6.
"""
import numpy as np

from qkinst import BpsStructure, QkPoint, chn_domain
from qkinst.coord import ingredient_forms, qk_metric_coord
from qkinst.curvature import einstein_fit, ricci_fd

dom = chn_domain(0, c=0.3, K=0.25)
bps = BpsStructure([((0, 1), 1)])


def metric(x):
    return qk_metric_coord(dom, bps, QkPoint.from_real(x)).matrix


for rho in (1.5, 3.0, 6.0):
    x = QkPoint(rho, [], [0.4], [1.2], 0.5).to_real()
    lam, rel = einstein_fit(ricci_fd(metric, x), metric(x))
    f_inst = ingredient_forms(dom, bps, QkPoint.from_real(x)).f_inst
    print(f"rho = {rho:3.1f}  f_inst = {f_inst: .3e}  lambda = {lam:.6f}  |Ric - lambda g|/|Ric| = {rel:.1e}")
