from .metrics import (PRF, SPEAKER_BUCKETS, Counts, MetricReport, b_cubed, b_cubed_counts, bucket_label,
                      bucket_speakers, ceaf_phi4, ceaf_phi4_counts, evaluate_by_speakers, evaluate_documents,
                      mention_hits, mention_recall, muc, muc_counts, phi4, recall_rate)
from .gap import Confusion, GapReport, gap_bias, gap_predictions_from_clusters, gap_score
