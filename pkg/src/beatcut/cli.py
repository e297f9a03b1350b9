"""Command-line entry point.

Subcommands mirror the pipeline stages plus `run` (everything) and
`synth` (generate a synthetic test project). Exit codes: 0 ok, 1 user
error, 2 provider error, 3 unrecoverable spec.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .footage.shots import MediaError
from .manifest import ManifestError, load_manifest
from .pipeline import Pipeline, StageDependencyError
from .planner import AllocationError
from .provider.base import ProviderError
from .editor import UnrecoverableSpecError
from .synth import generate_synthetic_project

EXIT_OK = 0
EXIT_USER = 1
EXIT_PROVIDER = 2
EXIT_UNRECOVERABLE = 3

_STAGES = ("deconstruct", "parse-audio", "plan", "edit", "render", "eval", "run")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beatcut",
        description="Edit long raw footage into a short, music-synchronized video.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity (-v info, -vv debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    for stage in _STAGES:
        sp = sub.add_parser(stage, help=f"run the {stage} stage" if stage != "run"
                            else "run every stage")
        sp.add_argument("manifest", type=Path, help="project manifest JSON")
        sp.add_argument("--provider", choices=["mock", "http"], default=None,
                        help="override the provider backend")
        sp.add_argument("--seed", type=int, default=None, help="override the pipeline seed")
        sp.add_argument("--force", action="store_true", help="ignore cached artifacts")
        if stage in ("run", "render"):
            sp.add_argument("--no-render", action="store_true",
                            help="skip media-tool rendering (EDL only)")
        if stage == "run":
            sp.add_argument("--plan-only", action="store_true",
                            help="stop after the plan stage")

    sp = sub.add_parser("synth", help="generate a synthetic test project")
    sp.add_argument("out_dir", type=Path)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scenes", type=int, default=5)
    sp.add_argument("--shots-per-scene", type=int, default=4)
    sp.add_argument("--bpm", type=float, default=120.0)
    sp.add_argument("--music-len", type=float, default=30.0)
    sp.add_argument("--render-video", action="store_true",
                    help="also write colored-block footage frames")
    return parser


def _config_overrides(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    if getattr(args, "provider", None):
        overrides["provider"] = {"kind": args.provider}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return overrides


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "synth":
        project = generate_synthetic_project(
            args.out_dir, seed=args.seed, n_scenes=args.scenes,
            shots_per_scene=args.shots_per_scene, bpm=args.bpm,
            music_len=args.music_len, render_video=args.render_video,
        )
        print(json.dumps({"manifest": str(project.manifest_path),
                          "protagonist": project.protagonist,
                          "shots": len(project.shot_ids)}, indent=2))
        return EXIT_OK

    try:
        project = load_manifest(args.manifest, _config_overrides(args))
        pipeline = Pipeline(project)
        if args.command == "run":
            result = pipeline.run(force=args.force, plan_only=args.plan_only,
                                  no_render=args.no_render)
            summary = {"artifacts_dir": str(project.artifacts_dir)}
            if "harmony" in result:
                summary["aligned_fraction"] = result["harmony"]["primary"]["aligned_fraction"]
                summary["clips"] = len(result["timeline"]["clips"])
                summary["rendered"] = result["render"]["rendered"]
            print(json.dumps(summary, indent=2))
        elif args.command == "deconstruct":
            pipeline.deconstruct(force=args.force)
        elif args.command == "parse-audio":
            pipeline.parse_audio(force=args.force)
        elif args.command == "plan":
            pipeline.plan(force=args.force)
        elif args.command == "edit":
            pipeline.edit(force=args.force)
        elif args.command == "render":
            pipeline.render(force=args.force, no_render=args.no_render)
        elif args.command == "eval":
            pipeline.evaluate(force=args.force)
        return EXIT_OK
    except (ManifestError, StageDependencyError, MediaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except (AllocationError, UnrecoverableSpecError) as exc:
        print(f"unrecoverable: {exc}", file=sys.stderr)
        return EXIT_UNRECOVERABLE
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER


if __name__ == "__main__":
    sys.exit(main())
