"""Provider-backed captioning: shot attributes, identities, scene summaries.

The character roster is injected into every captioning call so mentions
resolve to named identities instead of anonymous placeholders; returned
names are additionally re-mapped through roster aliases repo-side, so a
provider that still answers "the pilot" lands on the rostered name.
"""

from __future__ import annotations

from typing import Optional, Sequence

from ..config import FootageConfig
from ..provider.base import (
    Attachment,
    AttachmentKind,
    ModelRequest,
    Provider,
    Task,
    render_prompt,
)
from .embedding import embed_text
from .srt import SubtitleLine
from .types import (
    AttributeEmbeddings,
    CharacterIdentity,
    CharacterMention,
    Scene,
    Shot,
    ShotAttributes,
)

_CAPTION_PROMPT = (
    "Caption this shot. Report cinematography (including shot scale), every "
    "visible character with a 0-1 salience, the environment, and the action. "
    "Use roster names from the context block whenever a person matches one."
)

_IDENTITY_PROMPT = (
    "Infer the recurring character identities (names, roles, aliases) from "
    "this dialogue transcript."
)

_SUMMARY_PROMPT = (
    "Summarize this scene in a few sentences, grounded in the member shot "
    "captions. Refer to people by their roster names where available."
)


def _roster_context(identities: Sequence[CharacterIdentity]) -> list[dict]:
    return [
        {"name": i.name, "role": i.role, "aliases": list(i.aliases)}
        for i in identities
    ]


def _alias_map(identities: Sequence[CharacterIdentity]) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for ident in identities:
        mapping[ident.name.lower()] = ident.name
        for alias in ident.aliases:
            mapping[alias.lower()] = ident.name
    return mapping


def attach_embeddings(attrs: ShotAttributes, dim: int) -> ShotAttributes:
    names = " ".join(c.name for c in attrs.characters)
    emb = AttributeEmbeddings(
        cinematography=embed_text(f"{attrs.cinematography} {attrs.shot_scale}", dim),
        characters=embed_text(names, dim),
        environment=embed_text(attrs.environment, dim),
        action=embed_text(attrs.action, dim),
    )
    return ShotAttributes(
        cinematography=attrs.cinematography,
        shot_scale=attrs.shot_scale,
        characters=attrs.characters,
        environment=attrs.environment,
        action=attrs.action,
        embeddings=emb,
    )


def caption_shot(
    shot: Shot,
    provider: Provider,
    identities: Sequence[CharacterIdentity] = (),
    config: Optional[FootageConfig] = None,
) -> ShotAttributes:
    """Caption one shot's attributes and compute their embeddings."""
    cfg = config or FootageConfig()
    if not shot.keyframes:
        raise ValueError(f"shot {shot.id} has no sampled keyframes")
    context = {
        "shot_id": shot.id,
        "source": shot.source,
        "t_in": round(shot.t_in, 3),
        "t_out": round(shot.t_out, 3),
        "roster": _roster_context(identities),
    }
    frames_payload = {"shot_id": shot.id, "times": [round(t, 3) for t in shot.keyframes]}
    if shot.frame_paths:
        frames_payload["paths"] = list(shot.frame_paths)
    request = ModelRequest(
        task=Task.SHOT_CAPTION,
        prompt=render_prompt(_CAPTION_PROMPT, context),
        attachments=(Attachment(AttachmentKind.FRAMES, frames_payload),),
    )
    parsed = provider.complete(request).parsed
    aliases = _alias_map(identities)
    mentions = tuple(
        CharacterMention(
            name=aliases.get(str(c["name"]).lower(), str(c["name"])),
            salience=float(c["salience"]),
        )
        for c in parsed["characters"]
    )
    attrs = ShotAttributes(
        cinematography=parsed["cinematography"],
        shot_scale=parsed["shot_scale"],
        characters=mentions,
        environment=parsed["environment"],
        action=parsed["action"],
    )
    return attach_embeddings(attrs, cfg.embed_dim)


def infer_identities(
    subtitles: Sequence[SubtitleLine],
    provider: Provider,
) -> list[CharacterIdentity]:
    """Infer the character roster from a timed transcript.

    An empty transcript returns an empty roster without a provider call;
    the pipeline then degrades to anonymous characters.
    """
    if not subtitles:
        return []
    transcript = [
        {"start": round(s.start, 3), "end": round(s.end, 3), "text": s.text}
        for s in subtitles
    ]
    request = ModelRequest(
        task=Task.IDENTITY_INFERENCE,
        prompt=render_prompt(_IDENTITY_PROMPT, {"lines": len(transcript)}),
        attachments=(Attachment(AttachmentKind.TEXT, {"transcript": transcript}),),
    )
    parsed = provider.complete(request).parsed
    roster: list[CharacterIdentity] = []
    seen = set()
    for entry in parsed["identities"]:
        name = entry["name"].strip()
        if not name or name.lower() in seen:
            continue
        seen.add(name.lower())
        roster.append(CharacterIdentity(
            name=name,
            role=entry.get("role", ""),
            aliases=tuple(entry.get("aliases", [])),
        ))
    return roster


def summarize_scene(
    scene: Scene,
    shots_by_id: dict[str, Shot],
    provider: Provider,
    identities: Sequence[CharacterIdentity] = (),
) -> str:
    """Produce the scene's descriptive summary from member captions."""
    captions = []
    for shot_id in scene.shots:
        shot = shots_by_id[shot_id]
        if shot.attributes is None:
            raise ValueError(f"shot {shot_id} in scene {scene.id} is not captioned")
        captions.append(shot.attributes.describe())
    context = {
        "scene_id": scene.id,
        "captions": captions,
        "roster": _roster_context(identities),
    }
    request = ModelRequest(
        task=Task.SCENE_SUMMARY,
        prompt=render_prompt(_SUMMARY_PROMPT, context),
    )
    return provider.complete(request).parsed["summary"]
