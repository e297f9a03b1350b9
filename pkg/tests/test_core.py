import random

import pytest
from hypothesis import given, strategies as st

from beatcut.core import (
    Clip,
    MediaKind,
    MediaRef,
    ObjectiveWeights,
    Timeline,
    objective_score,
    timeline_duration,
    validate_timeline,
)


def media(duration=100.0, mid="m"):
    return MediaRef(id=mid, path=f"/media/{mid}", duration=duration, kind=MediaKind.AUDIO)


def timeline(*spans, source="src", music="m"):
    return Timeline(
        clips=tuple(Clip(source=source, t_in=a, t_out=b) for a, b in spans),
        music=music,
    )


class TestTimelineDuration:
    def test_empty_timeline_is_zero(self):
        assert timeline_duration(Timeline(clips=(), music="m")) == 0.0

    def test_two_clips(self):
        assert timeline_duration(timeline((0, 2), (5, 7))) == 4.0

    def test_matches_independent_summation(self):
        rng = random.Random(42)
        spans = []
        for _ in range(50):
            a = rng.uniform(0, 90)
            spans.append((a, a + rng.uniform(0.1, 10)))
        tl = timeline(*spans)
        expected = 0.0
        for a, b in spans:  # independent per-clip loop
            expected += b - a
        assert timeline_duration(tl) == pytest.approx(expected, abs=1e-12)

    def test_splitting_a_clip_preserves_duration(self):
        whole = timeline((1.0, 7.0))
        split = timeline((1.0, 3.7), (3.7, 7.0))
        assert timeline_duration(split) == pytest.approx(timeline_duration(whole))


def overlap_pairs_oracle(clips):
    """O(n^2) pairwise half-open interval intersection."""
    pairs = set()
    for i in range(len(clips)):
        for j in range(i + 1, len(clips)):
            a, b = clips[i], clips[j]
            if a.source == b.source and a.t_in < b.t_out and b.t_in < a.t_out:
                pairs.add((i, j))
    return pairs


class TestValidateTimeline:
    def test_touching_intervals_do_not_overlap(self):
        tl = timeline((0, 2), (2, 4))
        assert validate_timeline(tl, media(4.0), tolerance=0.05) == []

    def test_one_second_overlap_reported(self):
        tl = timeline((0, 3), (2, 4))
        violations = validate_timeline(tl, media(5.0), tolerance=0.05)
        overlaps = [v for v in violations if v.kind == "overlap"]
        assert len(overlaps) == 1
        assert overlaps[0].clip_indices == (0, 1)

    def test_duration_mismatch_reported(self):
        tl = timeline((0, 2))
        kinds = {v.kind for v in validate_timeline(tl, media(4.0), tolerance=0.05)}
        assert kinds == {"duration"}

    def test_clip_beyond_source_duration(self):
        tl = timeline((0, 2), (2, 4))
        src = MediaRef(id="src", path="/v", duration=3.5, kind=MediaKind.VIDEO)
        violations = validate_timeline(tl, media(4.0), 0.05, sources={"src": src})
        assert any(v.kind == "clip" and v.clip_indices == (1,) for v in violations)

    def test_empty_timeline_rejected(self):
        with pytest.raises(ValueError):
            validate_timeline(Timeline(clips=(), music="m"), media())

    def test_matches_bruteforce_oracle_on_random_sets(self):
        rng = random.Random(7)
        for _ in range(200):
            n = rng.randint(1, 30)
            clips = []
            for _ in range(n):
                a = rng.uniform(0, 50)
                clips.append(Clip(source=rng.choice("abc"), t_in=a, t_out=a + rng.uniform(0.05, 8)))
            tl = Timeline(clips=tuple(clips), music="m")
            got = {
                v.clip_indices for v in validate_timeline(tl, media(1e9), tolerance=1e12)
                if v.kind == "overlap"
            }
            assert got == overlap_pairs_oracle(clips)

    def test_reordering_clips_does_not_change_violation_set(self):
        rng = random.Random(3)
        clips = []
        for _ in range(12):
            a = rng.uniform(0, 20)
            clips.append(Clip(source=rng.choice("ab"), t_in=a, t_out=a + rng.uniform(0.5, 5)))

        def content_pairs(ordering):
            tl = Timeline(clips=tuple(ordering), music="m")
            out = set()
            for v in validate_timeline(tl, media(1e9), tolerance=1e12):
                if v.kind == "overlap":
                    i, j = v.clip_indices
                    pair = frozenset({(ordering[i].t_in, ordering[i].t_out),
                                      (ordering[j].t_in, ordering[j].t_out)})
                    out.add(pair)
            return out

        base = content_pairs(clips)
        for _ in range(5):
            shuffled = clips[:]
            rng.shuffle(shuffled)
            assert content_pairs(shuffled) == base


class TestObjectiveScore:
    def test_zero_vector(self):
        assert objective_score(0, 0, 0, 0, ObjectiveWeights()) == 0.0

    def test_uniform(self):
        w = ObjectiveWeights(1, 1, 1, 1)
        assert objective_score(0.5, 0.5, 0.5, 0.5, w) == pytest.approx(2.0)

    def test_matches_dot_product_oracle(self):
        rng = random.Random(11)
        for _ in range(100):
            q = [rng.random() for _ in range(4)]
            lam = [rng.random() for _ in range(4)]
            w = ObjectiveWeights(*lam)
            expected = sum(a * b for a, b in zip(lam, q))
            assert objective_score(*q, w) == pytest.approx(expected, abs=1e-12)

    def test_negative_weight_rejected_at_construction(self):
        with pytest.raises(ValueError):
            ObjectiveWeights(visual=-0.1)

    def test_all_zero_weights_rejected(self):
        with pytest.raises(ValueError):
            ObjectiveWeights(0, 0, 0, 0)

    def test_quality_outside_unit_interval_rejected(self):
        with pytest.raises(ValueError):
            objective_score(1.2, 0, 0, 0, ObjectiveWeights())

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_monotone_in_each_term(self, lo, hi):
        lo, hi = min(lo, hi), max(lo, hi)
        w = ObjectiveWeights(0.3, 0.9, 0.1, 2.0)
        base = objective_score(lo, 0.5, 0.5, 0.5, w)
        assert objective_score(hi, 0.5, 0.5, 0.5, w) >= base - 1e-12


class TestClipInvariants:
    def test_inverted_clip_rejected(self):
        with pytest.raises(ValueError):
            Clip(source="s", t_in=2.0, t_out=1.0)

    def test_negative_start_rejected(self):
        with pytest.raises(ValueError):
            Clip(source="s", t_in=-0.5, t_out=1.0)

    def test_nonpositive_media_duration_rejected(self):
        with pytest.raises(ValueError):
            MediaRef(id="x", path="/x", duration=0.0, kind=MediaKind.VIDEO)
