"""
Universal RNG Package

Perfectly uniform random integers from samples of an unknown finite-memory
source, by fixed-to-variable (Elias-style) and variable-to-fixed (greedy
dictionary) generators built on Markov type classes.
"""

__version__ = "1.0.0"

from .exceptions import (ConfigurationError, InputExhaustedError, ModelError,
                         RankRangeError, ResourceLimitError, SymbolError,
                         UniversalRNGError)
from .markov_model import (MarkovParams, ModelSpec, entropy_rate, marginal_entropy,
                           sample, sample_batch, seq_probability)
from .type_classes import (TypeCounts, all_types, class_size, counts_of, rank,
                           typecut, unrank, whittle_cofactor)
from .fvr import (FvrOutput, TargetSet, conditional_length, e1_generate, e2_generate,
                  expected_output_length_exact, greedy_decompose)
from .twice_universal import (OrderEstimate, distance_to_uniformity, empirical_cond_entropy,
                              estimate_order, tu_generate_exact, tu_generate_practical,
                              u_class)
from .vfr import (DictProfile, VfrConfig, VfrResult, expected_input_length_exact,
                  failure_probability, g1_construct, g2_generate)

__all__ = [
    'UniversalRNGError', 'ModelError', 'SymbolError', 'RankRangeError',
    'ConfigurationError', 'ResourceLimitError', 'InputExhaustedError',
    'ModelSpec', 'MarkovParams', 'seq_probability', 'entropy_rate', 'marginal_entropy',
    'sample', 'sample_batch',
    'TypeCounts', 'counts_of', 'class_size', 'whittle_cofactor', 'typecut', 'rank',
    'unrank', 'all_types',
    'TargetSet', 'FvrOutput', 'e1_generate', 'e2_generate', 'greedy_decompose',
    'conditional_length', 'expected_output_length_exact',
    'OrderEstimate', 'empirical_cond_entropy', 'estimate_order', 'u_class',
    'tu_generate_exact', 'tu_generate_practical', 'distance_to_uniformity',
    'VfrConfig', 'DictProfile', 'VfrResult', 'g1_construct', 'g2_generate',
    'expected_input_length_exact', 'failure_probability',
]
