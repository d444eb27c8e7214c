"""Object reconstruction from shifted measurements via banded longest paths.

Data is a matrix ``(M, N)`` of N measurements (or a video ``(M1, M2, N)``);
an object is a slowly varying form whose measurements are cyclically
shifted along a path with bounded speed.
"""
from .core import (
    INF,
    KernelWeights,
    ObjectEstimate,
    build_kernel,
    mean_projection,
    normalize_columns,
    shift_columns,
    solve_shifted_quadratic,
    total_change,
)
from .extract import Decomposition, ExtractionParams, decompose, denoise, extract_video, orka_extract
from .graph import MoveSet, NodeBudgetExceeded, PathResult, longest_path, recover_lambda
from .metrics import psnr
from .objective import CorrelationBand, correlate_band, full_objective, reduced_objective, tau_k

__version__ = "0.1.0"

__all__ = [
    "INF",
    "CorrelationBand",
    "Decomposition",
    "ExtractionParams",
    "KernelWeights",
    "MoveSet",
    "NodeBudgetExceeded",
    "ObjectEstimate",
    "PathResult",
    "build_kernel",
    "correlate_band",
    "decompose",
    "denoise",
    "extract_video",
    "full_objective",
    "longest_path",
    "mean_projection",
    "normalize_columns",
    "orka_extract",
    "psnr",
    "recover_lambda",
    "reduced_objective",
    "shift_columns",
    "solve_shifted_quadratic",
    "tau_k",
    "total_change",
]
