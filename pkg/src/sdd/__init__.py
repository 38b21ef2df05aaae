"""Infrared small-target detection by sparse differential directionality.

Low-rank Tucker background modeling with reweighted directional sparsity,
structure-tensor saliency enhancement, and the detection metrics used to
evaluate it.
"""

from .errors import (ArgumentError, NumericIntegrityError, SceneSpecError, SDDError,
                     SequenceIOError, SolverFailure, UndefinedMetricError)
from .metrics import TargetAnnotation, bsf, cg, gscr, roc, scr
from .pipeline import Detection, PipelineConfig, detect_sequence, segment_targets
from .saliency import AsceParams, asce, enhancement_factor
from .solver import SolverConfig, decompose
from .synth import SceneSpec, generate, standard_scene

__version__ = "0.1.0"
