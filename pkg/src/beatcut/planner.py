"""Music-anchored script synthesis.

Two stages with hard guarantees:

* :func:`allocate_scenes` maps scenes onto musical units. Scene reuse
  across units is forbidden; a violating proposal is regenerated with
  the offending scene ids listed as negative constraints, and after the
  retry cap a deterministic repair keeps each duplicated scene in its
  first unit only.
* :func:`plan_shots` turns one unit's keypoint grid into consecutive
  slots and asks the model to fill each slot with a scene and a visual
  description. Slot durations are never model output: they come from the
  grid, so per-unit durations sum to the unit length by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .audio.types import MusicUnit
from .config import PlannerConfig
from .core import Instruction
from .footage.embedding import cosine, embed_text
from .footage.types import Scene
from .provider.base import ModelRequest, Provider, Task, render_prompt

_ALLOCATION_PROMPT = (
    "You are planning a music-synchronized edit. Assign video scenes to the "
    "musical units listed in the context block so the storyline follows the "
    "instruction. Every unit needs at least one scene; a scene may appear "
    "under at most one unit. Scene ids listed under 'forbidden' were reused "
    "in a rejected proposal and must each be assigned to at most one unit. "
    "Reply with assignments plus a short storyline rationale."
)

_PLAN_PROMPT = (
    "Fill each music slot with one scene id drawn ONLY from the assigned "
    "scenes in the context block, plus a one-line visual description of the "
    "moment to retrieve. Return exactly one entry per slot, in slot order."
)


class AllocationError(RuntimeError):
    """Allocation could not be made valid (e.g. fewer scenes than units)."""


@dataclass(frozen=True)
class UnitAssignment:
    unit_id: str
    scene_ids: tuple[str, ...]


@dataclass(frozen=True)
class AllocationProposal:
    assignments: tuple[UnitAssignment, ...]
    storyline: str

    def as_map(self) -> dict[str, tuple[str, ...]]:
        return {a.unit_id: a.scene_ids for a in self.assignments}


@dataclass(frozen=True)
class AllocationViolation:
    kind: str  # "reuse" | "empty"
    detail: str
    scene_id: str = ""
    unit_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class ShotSpec:
    """Retrieval constraint for one music slot."""

    id: str
    unit_id: str
    duration: float       # target clip length, fixed by the keypoint grid
    scene_id: str         # search scope for the editor
    description: str      # semantic guidance for content matching
    slot_start: float     # absolute offset on the music axis

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"spec {self.id}: duration must be positive")


def validate_allocation(proposal: AllocationProposal) -> list[AllocationViolation]:
    """Report scenes assigned to multiple units and units left empty."""
    violations: list[AllocationViolation] = []
    owners: dict[str, list[str]] = {}
    for assignment in proposal.assignments:
        if not assignment.scene_ids:
            violations.append(AllocationViolation(
                kind="empty",
                detail=f"unit {assignment.unit_id} has no scenes assigned",
                unit_ids=(assignment.unit_id,),
            ))
        for scene_id in assignment.scene_ids:
            owners.setdefault(scene_id, []).append(assignment.unit_id)
    for scene_id, units in sorted(owners.items()):
        distinct = sorted(set(units))
        if len(units) > 1:
            violations.append(AllocationViolation(
                kind="reuse",
                detail=f"scene {scene_id} assigned to units {', '.join(distinct)}",
                scene_id=scene_id,
                unit_ids=tuple(distinct),
            ))
    return violations


def _proposal_from_response(parsed: dict, units: Sequence[MusicUnit],
                            known_scenes: set[str]) -> AllocationProposal:
    by_unit = {entry["unit_id"]: entry["scene_ids"] for entry in parsed["assignments"]}
    assignments = []
    for unit in units:  # unit order is canonical regardless of response order
        raw = by_unit.get(unit.id, [])
        deduped: list[str] = []
        for scene_id in raw:
            if scene_id in known_scenes and scene_id not in deduped:
                deduped.append(scene_id)
        assignments.append(UnitAssignment(unit_id=unit.id, scene_ids=tuple(deduped)))
    return AllocationProposal(assignments=tuple(assignments), storyline=parsed["storyline"])


def repair_allocation(proposal: AllocationProposal) -> AllocationProposal:
    """Deterministic repair: keep each duplicated scene in its first unit."""
    seen: set[str] = set()
    repaired = []
    for assignment in proposal.assignments:
        kept = tuple(s for s in assignment.scene_ids if s not in seen)
        seen.update(kept)
        repaired.append(UnitAssignment(unit_id=assignment.unit_id, scene_ids=kept))
    return AllocationProposal(assignments=tuple(repaired), storyline=proposal.storyline)


def allocate_scenes(
    units: Sequence[MusicUnit],
    scenes: Sequence[Scene],
    instruction: Instruction,
    provider: Provider,
    config: Optional[PlannerConfig] = None,
) -> AllocationProposal:
    """Produce a validated unit -> scenes mapping plus storyline."""
    if not units or not scenes:
        raise ValueError("allocation requires at least one unit and one scene")
    cfg = config or PlannerConfig()
    known = {s.id for s in scenes}
    context = {
        "instruction": instruction.text,
        "category": instruction.category.value,
        "units": [
            {"id": u.id, "start": round(u.start, 3), "end": round(u.end, 3),
             "label": u.label, "caption": u.caption}
            for u in units
        ],
        "scenes": [{"id": s.id, "summary": s.summary} for s in scenes],
        "forbidden": [],
    }

    proposal = None
    for attempt in range(cfg.allocation_retries + 1):
        request = ModelRequest(task=Task.ALLOCATION,
                               prompt=render_prompt(_ALLOCATION_PROMPT, context))
        proposal = _proposal_from_response(provider.complete(request).parsed, units, known)
        violations = validate_allocation(proposal)
        if not violations:
            return proposal
        reused = sorted({v.scene_id for v in violations if v.kind == "reuse"})
        context = {**context, "forbidden": reused}

    proposal = repair_allocation(proposal)
    leftover = validate_allocation(proposal)
    if leftover:
        empties = [v.unit_ids[0] for v in leftover if v.kind == "empty"]
        raise AllocationError(
            f"no valid allocation: units {empties} ended up empty after repair. "
            f"There are {len(scenes)} scenes for {len(units)} musical units; "
            f"consider a shorter music track or coarser structure."
        )
    return proposal


def unit_slots(unit: MusicUnit) -> list[tuple[float, float]]:
    """Consecutive (start, duration) slots induced by the unit's keypoints."""
    bounds = [unit.start] + [k.t for k in unit.keypoints] + [unit.end]
    return [(a, b - a) for a, b in zip(bounds, bounds[1:])]


def plan_shots(
    unit: MusicUnit,
    assigned: Sequence[Scene],
    instruction: Instruction,
    provider: Provider,
    config: Optional[PlannerConfig] = None,
    embed_dim: int = 256,
) -> list[ShotSpec]:
    """Emit one ShotSpec per keypoint slot of the unit.

    Scene choices outside the assigned pool are reprompted once, then
    replaced by the assigned scene whose summary embedding is nearest to
    the slot's description.
    """
    if not assigned:
        raise ValueError(f"unit {unit.id}: cannot plan with no assigned scenes")
    cfg = config or PlannerConfig()
    slots = unit_slots(unit)
    pool = {s.id for s in assigned}
    context = {
        "instruction": instruction.text,
        "unit": {"id": unit.id, "label": unit.label, "caption": unit.caption,
                 "start": round(unit.start, 3), "end": round(unit.end, 3)},
        "slots": [
            {"index": i, "start": round(start, 3), "duration": round(dur, 3)}
            for i, (start, dur) in enumerate(slots)
        ],
        "scenes": [{"id": s.id, "summary": s.summary} for s in assigned],
    }

    entries = None
    note = ""
    for attempt in range(cfg.plan_retries + 1):
        prompt = _PLAN_PROMPT if not note else f"{_PLAN_PROMPT}\n\nPrevious attempt rejected: {note}"
        request = ModelRequest(task=Task.SHOT_PLAN, prompt=render_prompt(prompt, context))
        entries = provider.complete(request).parsed["slots"]
        problems = []
        if len(entries) != len(slots):
            problems.append(f"expected {len(slots)} slots, got {len(entries)}")
        problems.extend(
            f"slot {i} uses scene {e['scene_id']} outside the assigned pool"
            for i, e in enumerate(entries) if e["scene_id"] not in pool
        )
        if not problems:
            break
        note = "; ".join(problems)

    # Deterministic repair: fix the slot count, then remap out-of-pool
    # scene choices to the nearest assigned summary.
    fixed = list(entries[:len(slots)])
    while len(fixed) < len(slots):
        scene = assigned[len(fixed) % len(assigned)]
        fixed.append({"scene_id": scene.id, "description": scene.summary or scene.id})
    summaries = {s.id: embed_text(s.summary or s.id, embed_dim) for s in assigned}
    specs = []
    for i, ((start, dur), entry) in enumerate(zip(slots, fixed)):
        scene_id = entry["scene_id"]
        description = entry.get("description", "") or f"moment {i + 1} of {unit.id}"
        if scene_id not in pool:
            query = embed_text(description, embed_dim)
            scene_id = max(summaries, key=lambda sid: (cosine(query, summaries[sid]), sid))
        specs.append(ShotSpec(
            id=f"{unit.id}_p{i + 1:02d}",
            unit_id=unit.id,
            duration=dur,
            scene_id=scene_id,
            description=description,
            slot_start=start,
        ))
    return specs
