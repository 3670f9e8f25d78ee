"""Numerical laboratory for Harnack estimates and parabolic frequency under Ricci flow.

Submodules: ``tensors`` (pointwise algebra), ``geometry`` (model
geometries and spatial operators), ``flow`` (Ricci-flow trajectories),
``heat`` (heat/conjugate solvers and kernels), ``calculus`` (evolution
identity residuals), ``corrections`` (correction functions),
``harnack`` (eigenvalue sweep reports), ``frequency`` (parabolic
frequency), ``scenarios``/``cli`` (scenario runner).
"""

__version__ = "0.1.0"
