"""
Inference methods package initialization.
"""
from .base_method import BaseMethod, InferenceOptions, SharedFit, build_method, prepare_fit
from .baselines import PluginLassoMethod, PostSelectionMethod
from .live import LiveMethod

__all__ = [
    'BaseMethod', 'InferenceOptions', 'SharedFit', 'build_method', 'prepare_fit',
    'LiveMethod', 'PluginLassoMethod', 'PostSelectionMethod',
]
