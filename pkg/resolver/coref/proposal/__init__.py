from .proposal import FeedForwardScorer, MentionProposer, MentionScore, SpanScores, keep_count
