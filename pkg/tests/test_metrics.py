import math
import random

import pytest

from beatcut.audio.types import KeypointKind, SoundKeypoint
from beatcut.core import Clip, Timeline
from beatcut.metrics import av_harmony, harmony_sweep


def kp(t, kind=KeypointKind.DOWNBEAT):
    return SoundKeypoint(t=t, kind=kind, intensity=1.0)


def timeline_with_cuts(cuts, end=30.0):
    """Clips whose interior cut positions are exactly ``cuts``."""
    bounds = [0.0] + list(cuts) + [end]
    clips = tuple(Clip(source="src", t_in=a, t_out=b) for a, b in zip(bounds, bounds[1:]))
    return Timeline(clips=clips, music="m")


class TestAvHarmony:
    def test_cuts_on_keypoints_align_fully(self):
        tl = timeline_with_cuts([2.0, 4.0, 6.0])
        report = av_harmony(tl, [kp(2.0), kp(4.0), kp(6.0)], threshold=0.1)
        assert report.aligned_fraction == 1.0
        assert report.offsets == (0.0, 0.0, 0.0)

    def test_single_offside_cut(self):
        # one cut at 5.15 s with keypoints at 5.0 and 6.0: the minimum
        # offset is 0.15, beyond the 0.1 s perceptual threshold.
        tl = timeline_with_cuts([5.15], end=10.0)
        report = av_harmony(tl, [kp(5.0), kp(6.0)], threshold=0.1)
        assert report.offsets == (pytest.approx(0.15),)
        assert report.aligned_fraction == 0.0

    def test_empty_keypoints_all_infinite(self):
        tl = timeline_with_cuts([3.0, 7.0])
        report = av_harmony(tl, [], threshold=0.1)
        assert all(math.isinf(d) for d in report.offsets)
        assert report.aligned_fraction == 0.0

    def test_single_clip_timeline_vacuous(self):
        tl = timeline_with_cuts([])
        report = av_harmony(tl, [kp(1.0)], threshold=0.1)
        assert report.aligned_fraction == 1.0
        assert report.offsets == ()

    def test_empty_timeline_rejected(self):
        with pytest.raises(ValueError):
            av_harmony(Timeline(clips=(), music="m"), [kp(1.0)])

    def test_matches_linear_scan_oracle(self):
        rng = random.Random(21)
        for _ in range(300):
            n_cuts = rng.randint(1, 15)
            cuts = sorted(rng.uniform(0.5, 29.5) for _ in range(n_cuts))
            deduped = [cuts[0]]
            for c in cuts[1:]:
                if c - deduped[-1] > 1e-3:
                    deduped.append(c)
            kps = [kp(rng.uniform(0, 30)) for _ in range(rng.randint(0, 25))]
            report = av_harmony(timeline_with_cuts(deduped), kps, threshold=0.1)
            for cut, offset in zip(report.cut_times, report.offsets):
                if kps:
                    expected = min(abs(cut - k.t) for k in kps)  # linear scan
                    assert offset == pytest.approx(expected, abs=1e-12)
                else:
                    assert math.isinf(offset)

    def test_invariant_to_keypoint_duplication_and_order(self):
        tl = timeline_with_cuts([2.0, 5.0, 9.0])
        base = [kp(1.9), kp(5.5), kp(9.05)]
        noisy = [base[2], base[0], base[1], base[0], base[2]]
        a = av_harmony(tl, base, threshold=0.1)
        b = av_harmony(tl, noisy, threshold=0.1)
        assert a.offsets == b.offsets
        assert a.aligned_fraction == b.aligned_fraction

    def test_fraction_monotone_in_threshold(self):
        tl = timeline_with_cuts([2.0, 5.0, 9.0, 14.0])
        kps = [kp(2.03), kp(5.2), kp(8.7), kp(14.0)]
        fractions = [av_harmony(tl, kps, threshold=t).aligned_fraction
                     for t in (0.01, 0.05, 0.1, 0.2, 0.5)]
        assert fractions == sorted(fractions)

    def test_per_kind_breakdown(self):
        tl = timeline_with_cuts([2.0, 5.0])
        kps = [kp(2.0, KeypointKind.DOWNBEAT), kp(5.0, KeypointKind.PITCH_CHANGE)]
        report = av_harmony(tl, kps, threshold=0.1)
        assert report.per_kind["downbeat"] == 0.5
        assert report.per_kind["pitch_change"] == 0.5


class TestSweep:
    def test_sweep_matches_pointwise_reports(self):
        tl = timeline_with_cuts([2.0, 5.0, 9.0])
        kps = [kp(2.04), kp(5.12), kp(8.8)]
        thresholds = (0.05, 0.1, 0.2)
        sweep = harmony_sweep(tl, kps, thresholds)
        assert [r.threshold for r in sweep] == list(thresholds)
        for report in sweep:
            assert report.aligned_fraction == av_harmony(tl, kps, report.threshold).aligned_fraction
