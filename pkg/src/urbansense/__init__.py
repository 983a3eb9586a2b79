"""urbansense: a geo-social stream engine.

Replays or synthesizes geo-tagged social message streams, enriches each
message (gazetteer geoparsing, topics, emotions, incident templates, event
relevance), accumulates windowed spatial analytics (heat surfaces, burst and
gathering alerts, interaction graphs, guidance sectors), and serves the
result over an HTTP + server-sent-events API with operator curation.
"""

__version__ = "0.1.0"

from .errors import UrbanSenseError

__all__ = ["UrbanSenseError", "__version__"]
