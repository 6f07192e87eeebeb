"""Bit-exact model of quantized context-dependent LIF (qCLIF) neurons."""
from .core import (LayerParams, LayerState, NeuronParams, QclifLayer, WeightSet, apical_step, gate_weight,
                   layer_step, somatic_input, somatic_step, synaptic_sum)
from .datapath import DatapathConfig, PipelineTrace, mu_multiply, run_datapath, swm_reduce
from .errors import Overflow, QclifError
from .fixedpoint import FixedPointValue, WidthReport, add_exact, required_accumulator_width, saturate

__version__ = "0.1.0"
