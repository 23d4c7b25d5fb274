"""Brune synthesis of one-port and multiport impedances and circuit quantization."""

from .brune_multiport import (
    BelevitchTransformer,
    MultiportBruneCircuit,
    MultiportBruneStage,
    recompose_multiport,
    synthesize_multiport,
)
from .brune_oneport import (
    OnePortBruneCircuit,
    OnePortBruneStage,
    SynthesisConfig,
    recompose_oneport,
    synthesize_oneport,
)
from .dissipation import BathSpec, all_baths, series_bath, shunt_bath, t1_rate
from .errors import BruneError, NumericalError, ValidationError
from .fitting import enforce_passivity, fit_error, vector_fit
from .loop_matrices import (
    EffectiveLoopMatrices,
    JosephsonJunction,
    Resistor,
    VoltageSource,
    effective_loops,
    multiport_effective_loops,
    oneport_effective_loops,
)
from .model_core import (
    FrequencySamples,
    PoleResidueModel,
    StateSpaceModel,
    check_positive_real,
    pole_residue_to_statespace,
)
from .quantize import QuantizedModel, normal_modes, quantize

__version__ = "0.1.0"

__all__ = [
    "BathSpec",
    "BelevitchTransformer",
    "BruneError",
    "EffectiveLoopMatrices",
    "FrequencySamples",
    "JosephsonJunction",
    "MultiportBruneCircuit",
    "MultiportBruneStage",
    "NumericalError",
    "OnePortBruneCircuit",
    "OnePortBruneStage",
    "PoleResidueModel",
    "QuantizedModel",
    "Resistor",
    "StateSpaceModel",
    "SynthesisConfig",
    "ValidationError",
    "VoltageSource",
    "all_baths",
    "check_positive_real",
    "effective_loops",
    "enforce_passivity",
    "fit_error",
    "multiport_effective_loops",
    "normal_modes",
    "oneport_effective_loops",
    "pole_residue_to_statespace",
    "quantize",
    "recompose_multiport",
    "recompose_oneport",
    "series_bath",
    "shunt_bath",
    "synthesize_multiport",
    "synthesize_oneport",
    "t1_rate",
    "vector_fit",
]
