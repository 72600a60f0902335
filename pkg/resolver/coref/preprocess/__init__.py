from .preprocess import (AugmentedSequence, DocumentInput, Piece, Window, enumerate_spans, insert_speakers,
                         make_windows, merge_windows, prepare_document, speaker_pieces, window_owner)
