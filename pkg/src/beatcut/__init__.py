"""beatcut: edit long raw footage into a short, music-synchronized video.

The pipeline deconstructs footage into shots and scenes, parses the music
track into structural units with a scored grid of candidate cut points,
plans a music-anchored shot script under hard non-reuse / duration
constraints, resolves each planned shot to a concrete clip through a
retrieve-trim-review loop, and finally exports an EDL (and, when a media
tool is available, a rendered video).

Everything runs offline against a deterministic mock model provider;
an OpenAI-compatible HTTP provider can be swapped in for real runs.
"""

__version__ = "0.1.0"
