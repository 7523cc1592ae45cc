"""gh-lab: global hypoellipticity diagnostics for involutive systems.

Decides and demonstrates global hypoellipticity of the operator
L u = d_t u + sum_k omega_k ^ d/dx_k u on model manifolds times a torus,
by computing periods of closed 1-forms, classifying the period matrix as
rational / Liouville / Diophantine, solving L u = f mode by mode with
small-divisor control, and constructing explicit singular solutions.
"""

__version__ = "0.1.0"
