"""Lyapunov exponents and dimension of the maximal-entropy measure of polynomial maps of C^n."""

__version__ = "0.1.0"

from .endomorphism import (  # noqa: E402
    PolyMap, dense, evaluate, from_spec, is_regular, jacobian, one_d, preimages, product,
    skew2d, to_spec,
)
from .greens import EscapeParams, escape_radius, escape_rate, in_filled_julia  # noqa: E402
from .sampler import (  # noqa: E402
    MeasureSample, OrbitWindow, backward_orbit, backward_step, sample_measure,
)
from .lyapunov import LyapunovEstimate, check_bounds, estimate_exponents  # noqa: E402
from .dimension import (  # noqa: E402
    DimensionReport, conjecture2_formula, correlation_dimension, estimate_dimension,
    knn_local_dimension, mane_formula, theorem_bound,
)
from .verifier import (  # noqa: E402
    Lemma1Config, VerificationReport, covering_statistics, verify_inverse_branch,
    verify_preimage_scaling,
)
