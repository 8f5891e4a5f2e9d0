"""Tutorial recommendation for live-stream video transcripts.

Pipeline: prune the tutorial pool with tool-name mentions and co-occurrence
similarity, compress the transcript with an unsupervised gate summarizer,
then rank candidates by embedding similarity plus discourse consistency.
A supervised sentence-level link classifier and three ranking baselines
round out the package, with a synthetic planted-gold corpus generator for
end-to-end testing.
"""

__version__ = "0.1.0"
