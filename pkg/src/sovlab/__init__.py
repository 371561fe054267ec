"""sovlab - exact numerical checks for SoV bases of gl(3)/gl(2) spin chains.

The library builds fused transfer matrices of the rational gl(3) (and gl(2))
inhomogeneous chain with a twist, constructs left/right separation-of-variables
bases from them, and verifies the algebraic identities these objects satisfy
(fusion hierarchy, coupling-matrix sparsity, Vandermonde measures, determinant
scalar products, conserved-charge orthogonalization) at desk scale.
"""

__version__ = "0.1.0"

from .errors import (
    SovLabError,
    SizeCapError,
    EigFailure,
    DegenerateReference,
    SingularBasis,
    SingularGram,
    DetKZero,
    DegenerateFamily,
    SpectrumCollision,
    SpectrumNotSimple,
    AmbiguousPattern,
    PatternMissing,
    IndexOrder,
    ConfigError,
    TaskFailure,
)
from .gl3_model import ModelParams, TwistData
from .gl2_model import Gl2Params
from .sov_bases import TernaryIndex, SovBasisPair
