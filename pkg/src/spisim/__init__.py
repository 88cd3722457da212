"""Simplex-coded single-pixel imaging: simulation and reconstruction."""

from .simplex import (SimplexVertices, EncodedMatrix, DecodeOperator,
                      build_simplex_vertices, encode_matrix,
                      build_decode_operator, decode_measurement,
                      complementary_combine)
from .sampling import (SamplingBasisSpec, PatternSet, generate_dct_basis,
                       to_direct_dmd, to_simplex_dmd, binarize_error_diffusion,
                       save_pattern_set, load_pattern_set)
from .camera import (SceneImage, BiasTrajectory, NoiseModel, MeasurementRecord,
                     measure, decode_direct, decode_simplex, save_record,
                     load_record)
from .recon import (Reconstructor, Reconstruction, build_reconstructor,
                    build_simplex_reconstructor, build_for_patterns,
                    reconstruct, psnr, save_reconstructor, load_reconstructor)
from .experiments import (SweepConfig, SweepResult, SweepRow, DynamicConfig,
                          DynamicResult, budget_k, run_psnr_sweep,
                          find_optimal_p, run_dynamic_scene)

__version__ = "0.1.0"

__all__ = [
    "SimplexVertices", "EncodedMatrix", "DecodeOperator",
    "build_simplex_vertices", "encode_matrix", "build_decode_operator",
    "decode_measurement", "complementary_combine",
    "SamplingBasisSpec", "PatternSet", "generate_dct_basis", "to_direct_dmd",
    "to_simplex_dmd", "binarize_error_diffusion", "save_pattern_set",
    "load_pattern_set",
    "SceneImage", "BiasTrajectory", "NoiseModel", "MeasurementRecord",
    "measure", "decode_direct", "decode_simplex", "save_record", "load_record",
    "Reconstructor", "Reconstruction", "build_reconstructor",
    "build_simplex_reconstructor", "build_for_patterns", "reconstruct", "psnr",
    "save_reconstructor", "load_reconstructor",
    "SweepConfig", "SweepResult", "SweepRow", "DynamicConfig", "DynamicResult",
    "budget_k", "run_psnr_sweep", "find_optimal_p", "run_dynamic_scene",
]
