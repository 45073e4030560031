"""
Experiment harness for the universal RNG package.

Uniformity tests (exact and sampled), asymptotic length/failure experiments
and the desk-scale self-test.
"""

from .uniformity import UniformityReport, run_uniformity_test
from .asymptotics import (AsymptoticsReport, run_fv_asymptotics, run_vf_asymptotics,
                          vfr_analysis_table)
from .selftest import SelftestReport, run_selftest

__all__ = [
    'UniformityReport', 'run_uniformity_test',
    'AsymptoticsReport', 'run_fv_asymptotics', 'run_vf_asymptotics', 'vfr_analysis_table',
    'SelftestReport', 'run_selftest',
]
