"""Sherman-Morrison regularization for Hotelling-Bodewig matrix inversion.

Subtracting a well-chosen rank-one matrix ``b c^H`` from an ill-conditioned
Wishart matrix ``A = H H^H`` lowers its condition number, so the quadratically
convergent HB iteration needs fewer steps. ``A^-1`` is then recovered exactly
with the Sherman-Morrison identity.
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateSpectrumError,
    DivergenceError,
    GeometryError,
    InternalConsistencyError,
    NotHermitianError,
    ShapeError,
    SingularMatrixError,
    SmregError,
)
from .iterative import (
    IterationTrace,
    build_preconditioner,
    gershgorin_omega,
    hb_invert,
    optimal_omega,
    preconditioned_invert,
)
from .matrix import Spectrum, direct_inverse, hermitian_eig, kappa, read_matrix, write_matrix
from .methods import invert
from .smr import (
    RankOneUpdate,
    list_regularize,
    lowcomplexity_update,
    select_alpha,
    sm_recover,
    theorem1_update,
    theorem2_update,
)

__version__ = "0.1.0"
