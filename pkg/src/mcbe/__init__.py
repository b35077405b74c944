"""Energy-aware multi-codec bitrate-ladder estimation.

Predicts per-representation VMAF from DCT-energy complexity features, drops
perceptually redundant rungs within each codec's ladder, drops newer-codec
rungs that do not beat the baseline codec's RD curve, and accounts for the
encoding, storage and transmission energy saved.
"""

__version__ = "0.1.0"

from .eliminate import (EliminationConfig, RdPoint, eliminate, estimate_ladder, interpolate_rd,
                        step1_jnd_prune, step2_cross_codec_prune)
from .energy import EnergyParams, EnergyReport, encoding_energy, ladder_size, report, storage_energy
from .features import SegmentFeatures, block_texture_energy, dct2d, segment_features
from .forest import (DecisionTree, ForestModel, ModelBank, TrainingSample, load_bank, predict,
                     predict_ladder, save_bank, train_forest)
from .ladder import Codec, MultiCodecLadder, OptimizedLadder, Resolution, Rung, validate_ladder
from .y4m import Frame, Segment, parse_y4m, segment_stream, write_y4m

__all__ = [
    "Codec", "DecisionTree", "EliminationConfig", "EnergyParams", "EnergyReport", "ForestModel",
    "Frame", "ModelBank", "MultiCodecLadder", "OptimizedLadder", "RdPoint", "Resolution", "Rung",
    "Segment", "SegmentFeatures", "TrainingSample", "block_texture_energy", "dct2d", "eliminate",
    "encoding_energy", "estimate_ladder", "interpolate_rd", "ladder_size", "load_bank",
    "parse_y4m", "predict", "predict_ladder", "report", "save_bank", "segment_features",
    "segment_stream", "step1_jnd_prune", "step2_cross_codec_prune", "storage_energy",
    "train_forest", "validate_ladder", "write_y4m",
]
