from .vocab import CLS, CONTINUATION, PAD, RESERVED, SEP, UNK, Vocabulary
from .encoder import (FRAMING_OVERHEAD, EncodedDocument, PackedSequence, TransformerEncoder, encode_document,
                      load_pretrained, pack)
