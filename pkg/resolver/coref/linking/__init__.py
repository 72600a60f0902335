from .linking import (ForwardScores, MentionLinker, MentionQuery, PairScore, bidirectional_score, build_query,
                      build_question, overall_score, pair_score, prune_candidates)
