"""Bottom-up video deconstruction: shots, attributes, scenes, identities."""

from .captions import attach_embeddings, caption_shot, infer_identities, summarize_scene
from .embedding import cosine, embed_text
from .scenes import aggregate_scenes, shot_similarity
from .shots import (
    MediaError,
    detect_shots,
    load_boundary_sidecar,
    sample_keyframes,
    shots_from_boundaries,
)
from .srt import SubtitleLine, load_srt, parse_srt
from .types import (
    AttributeEmbeddings,
    CharacterIdentity,
    CharacterMention,
    Scene,
    Shot,
    ShotAttributes,
    SimilarityWeights,
)

__all__ = [
    "AttributeEmbeddings",
    "CharacterIdentity",
    "CharacterMention",
    "MediaError",
    "Scene",
    "Shot",
    "ShotAttributes",
    "SimilarityWeights",
    "SubtitleLine",
    "aggregate_scenes",
    "attach_embeddings",
    "caption_shot",
    "cosine",
    "detect_shots",
    "embed_text",
    "infer_identities",
    "load_boundary_sidecar",
    "load_srt",
    "parse_srt",
    "sample_keyframes",
    "shot_similarity",
    "shots_from_boundaries",
]
