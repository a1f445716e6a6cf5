"""Ritz projection for the Helmholtz operator ``-Delta* + 1``.

The right-hand side ``(l(l+1) + 1) y_{3,0}`` is collocated at the nodes;
the nodal residual is at rounding level and the off-node error converges.
This needs four kernel derivatives, so only the phi4 kernel qualifies.
"""

from sphere_nse.studies import helmholtz_study

print(helmholtz_study("wendland4:eps=1", "y3,0", [100, 200, 400, 800]).format())
