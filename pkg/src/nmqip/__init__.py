"""Reduced logical dynamics of error-corrected systems and their non-Markovianity."""

from .dynamics import (
    CanonicalGenerator, Evolver, GkslGenerator, MapFamily, Trajectory, canonical_decompose, canonical_rates,
    family_from_function, generator_from_family, generators_from_family, intermediate_map, intermediate_maps,
    logical_map_family, propagate,
)
from .exceptions import (
    DimensionError, GeneratorError, KLViolation, LeakageError, NumericalError, SingularMapError, TruncationError,
)
from .frames import (
    CodeSpec, SubsystemFrame, build_frame, check_kl, logical_state, squeezed_cat_frame, teleportation_frame,
    three_qubit_frame,
)
from .linalg import (
    ChoiMatrix, DensityMatrix, QuantumChannel, Superoperator, choi_to_kraus, choi_to_superoperator, cp_check,
    kraus_to_superoperator, partial_trace, superoperator_to_choi, tensor_product, trace_distance, trace_norm,
)
from .measures import (
    BlpSearchConfig, MeasureResult, blp_measure, closed_form_R, decay_rate_measure, rhp_density, rhp_measure,
)
from .models import SqueezedCatModel, TeleportationModel, ThreeQubitModel, build_model
from .qem import QemBound, cost_after_qec, distinguishability_bound, sweep_orthogonal_pairs, unbiased_bound

__version__ = "0.1.0"
