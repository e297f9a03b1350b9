"""Structural audio parsing: keypoints, units, and the cut grid."""

from .keypoints import (
    AudioTooShortError,
    detect_all_keypoints,
    detect_keypoints,
    filter_keypoints,
    score_keypoint,
    select_unit_keypoints,
)
from .structure import heuristic_boundaries, segment_structure
from .types import KeypointKind, KeypointWeights, MusicUnit, SoundKeypoint
from .wavio import load_audio, read_wav, resample, wav_duration, write_wav

__all__ = [
    "AudioTooShortError",
    "KeypointKind",
    "KeypointWeights",
    "MusicUnit",
    "SoundKeypoint",
    "detect_all_keypoints",
    "detect_keypoints",
    "filter_keypoints",
    "heuristic_boundaries",
    "load_audio",
    "read_wav",
    "resample",
    "score_keypoint",
    "segment_structure",
    "select_unit_keypoints",
    "wav_duration",
    "write_wav",
]
