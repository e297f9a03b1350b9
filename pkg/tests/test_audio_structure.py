import numpy as np
import pytest

from beatcut.audio.structure import heuristic_boundaries, segment_structure
from beatcut.audio.types import KeypointKind, SoundKeypoint
from beatcut.config import AudioConfig
from beatcut.provider import MockProvider, ScriptedProvider
from beatcut.synth import synthesize_click_track

SR = 22050


def scripted_structure(units, captions=None):
    by_task = {}
    from beatcut.provider import Task
    by_task[Task.MUSIC_STRUCTURE] = [{"units": units}]
    if captions:
        by_task[Task.MUSIC_CAPTION] = [{"caption": c} for c in captions]
    return ScriptedProvider(by_task=by_task, fallback=MockProvider())


class TestProviderPath:
    def test_scripted_boundaries_tile_exactly(self):
        x, _ = synthesize_click_track(120, 20.0, seed=0)
        provider = scripted_structure(
            [{"start": 0, "end": 10, "label": "verse", "caption": "a"},
             {"start": 10, "end": 20, "label": "chorus", "caption": "b"}],
        )
        units = segment_structure(x, SR, provider, keypoints=[], config=AudioConfig())
        assert len(units) == 2
        assert units[0].start == 0.0 and units[0].end == 10.0
        assert units[1].start == 10.0 and units[1].end == pytest.approx(20.0)
        assert [u.label for u in units] == ["verse", "chorus"]

    def test_boundaries_snap_to_nearby_keypoint(self):
        x, _ = synthesize_click_track(120, 20.0, seed=0)
        provider = scripted_structure(
            [{"start": 0, "end": 10.3, "label": "verse", "caption": "a"},
             {"start": 10.3, "end": 20, "label": "chorus", "caption": "b"}],
        )
        keypoints = [SoundKeypoint(t=10.03, kind=KeypointKind.DOWNBEAT, intensity=1.0)]
        units = segment_structure(x, SR, provider, keypoints=keypoints, config=AudioConfig())
        assert units[0].end == pytest.approx(10.03)

    def test_far_keypoint_not_snapped(self):
        x, _ = synthesize_click_track(120, 20.0, seed=0)
        provider = scripted_structure(
            [{"start": 0, "end": 10, "label": "verse", "caption": "a"},
             {"start": 10, "end": 20, "label": "chorus", "caption": "b"}],
        )
        keypoints = [SoundKeypoint(t=12.0, kind=KeypointKind.DOWNBEAT, intensity=1.0)]
        units = segment_structure(x, SR, provider, keypoints=keypoints, config=AudioConfig())
        assert units[0].end == pytest.approx(10.0)

    def test_missing_captions_requested_from_provider(self):
        x, _ = synthesize_click_track(120, 16.0, seed=0)
        provider = scripted_structure(
            [{"start": 0, "end": 8, "label": "verse"},
             {"start": 8, "end": 16, "label": "chorus"}],
            captions=["first cap", "second cap"],
        )
        units = segment_structure(x, SR, provider, keypoints=[], config=AudioConfig())
        assert [u.caption for u in units] == ["first cap", "second cap"]


class TestHeuristicFallback:
    def two_texture(self):
        rng = np.random.default_rng(1)
        t = np.arange(int(30 * SR)) / SR
        x = 0.1 * np.sin(2 * np.pi * 220 * t)
        loud = 0.6 * rng.standard_normal(len(t))
        x[t >= 15.0] = loud[t >= 15.0]
        return x

    def test_two_texture_boundary_near_fifteen(self):
        boundaries = heuristic_boundaries(self.two_texture(), SR, AudioConfig())
        assert boundaries, "expected at least one boundary"
        assert min(abs(b - 15.0) for b in boundaries) <= 1.0

    def test_fallback_units_tile_and_are_labeled(self):
        units = segment_structure(self.two_texture(), SR, provider=None,
                                  keypoints=[], config=AudioConfig())
        assert units[0].start == 0.0
        assert units[-1].end == pytest.approx(30.0)
        for a, b in zip(units, units[1:]):
            assert a.end == b.start
        assert all(u.label for u in units)
        assert all(u.caption for u in units)


class TestProviderFailure:
    def test_provider_failure_falls_back_when_enabled(self):
        from beatcut.provider import TransportError
        from beatcut.config import ProviderConfig

        x, _ = synthesize_click_track(120, 22.0, seed=0)
        failing = ScriptedProvider(script=[TransportError("down")] * 9,
                                   config=ProviderConfig(max_attempts=2, backoff_base=0.0))
        units = segment_structure(x, SR, failing, keypoints=[],
                                  config=AudioConfig(structure_fallback=True))
        assert units and units[-1].end == pytest.approx(22.0)

    def test_provider_failure_raises_when_fallback_disabled(self):
        from beatcut.provider import TransportError
        from beatcut.provider.base import ProviderError
        from beatcut.config import ProviderConfig

        x, _ = synthesize_click_track(120, 22.0, seed=0)
        failing = ScriptedProvider(script=[TransportError("down")] * 9,
                                   config=ProviderConfig(max_attempts=2, backoff_base=0.0))
        with pytest.raises(ProviderError):
            segment_structure(x, SR, failing, keypoints=[],
                              config=AudioConfig(structure_fallback=False))


class TestStructuralPostconditions:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_units_always_tile_without_overlap(self, seed):
        x, _ = synthesize_click_track(100 + 20 * seed, 22.0, seed=seed)
        units = segment_structure(x, SR, MockProvider(), keypoints=[], config=AudioConfig())
        assert units[0].start == 0.0
        assert units[-1].end == pytest.approx(len(x) / SR)
        for a, b in zip(units, units[1:]):
            assert a.end == b.start
            assert a.length > 0
