from dataclasses import dataclass
from typing import Optional, Sequence

import torch
import torch.nn as nn

from coref.config import EncoderConfig
from coref.errors import ContractViolation, DataError
from coref.logger import create_logger
from coref.preprocess import DocumentInput, make_windows, merge_windows

logger = create_logger(__name__)

QUERY_SEGMENT = 0
CONTEXT_SEGMENT = 1
# [CLS] query [SEP] context [SEP]
FRAMING_OVERHEAD = 3


@dataclass
class PackedSequence:
    ids: torch.Tensor
    segment_ids: torch.Tensor
    context_offset: int

    def __len__(self):
        return self.ids.shape[0]

    @property
    def context_length(self) -> int:
        return len(self) - self.context_offset - 1


def pack(query_ids: Sequence[int], context_ids: Sequence[int], cls_id: int, sep_id: int) -> PackedSequence:
    ids = [cls_id] + list(query_ids) + [sep_id] + list(context_ids) + [sep_id]
    segments = [QUERY_SEGMENT] * (len(query_ids) + 2) + [CONTEXT_SEGMENT] * (len(context_ids) + 1)
    return PackedSequence(torch.tensor(ids, dtype=torch.long), torch.tensor(segments, dtype=torch.long),
                          context_offset=len(query_ids) + 2)


class TransformerEncoder(nn.Module):
    """Small trainable transformer producing one vector per piece.

    Token, position and segment embeddings are summed and normalized before
    a stack of pre-norm transformer layers.
    """

    def __init__(self, config: EncoderConfig):
        super().__init__()
        config.validate()
        self.config = config

        self.token_embeddings = nn.Embedding(config.vocab_size, config.hidden_dim, padding_idx=0)
        self.position_embeddings = nn.Embedding(config.max_positions, config.hidden_dim)
        self.segment_embeddings = nn.Embedding(2, config.hidden_dim)
        self.embedding_norm = nn.LayerNorm(config.hidden_dim)
        self.dropout = nn.Dropout(config.dropout)

        layer = nn.TransformerEncoderLayer(
            d_model=config.hidden_dim,
            nhead=config.num_heads,
            dim_feedforward=4 * config.hidden_dim,
            dropout=config.dropout,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.layers = nn.TransformerEncoder(layer, num_layers=config.num_layers,
                                            norm=nn.LayerNorm(config.hidden_dim), enable_nested_tensor=False)

    @property
    def hidden_dim(self) -> int:
        return self.config.hidden_dim

    @property
    def device(self) -> torch.device:
        return self.token_embeddings.weight.device

    def forward(self, ids: Optional[torch.Tensor] = None, segment_ids: Optional[torch.Tensor] = None,
                padding_mask: Optional[torch.Tensor] = None, inputs_embeds: Optional[torch.Tensor] = None):
        """Encodes a (batch, length) id tensor, or precomputed token embeddings, to (batch, length, hidden)"""

        if inputs_embeds is None:
            inputs_embeds = self.token_embeddings(ids)
        length = inputs_embeds.shape[1]
        if length > self.config.max_positions:
            raise ContractViolation(
                f"Sequence of {length} pieces exceeds max_positions={self.config.max_positions}; "
                f"split it into windows before encoding")

        positions = torch.arange(length, device=inputs_embeds.device)
        if segment_ids is None:
            segment_ids = torch.zeros(inputs_embeds.shape[:2], dtype=torch.long, device=inputs_embeds.device)

        x = inputs_embeds + self.position_embeddings(positions)[None] + self.segment_embeddings(segment_ids)
        x = self.dropout(self.embedding_norm(x))
        return self.layers(x, src_key_padding_mask=padding_mask)

    def encode(self, ids: torch.Tensor) -> torch.Tensor:
        return self(ids.to(self.device)[None])[0]

    def encode_packed(self, packed: PackedSequence) -> torch.Tensor:
        return self(packed.ids.to(self.device)[None], packed.segment_ids.to(self.device)[None])[0]

    def encode_batch(self, batch: Sequence[PackedSequence], pad_id: int = 0) -> torch.Tensor:
        """Encodes packed sequences padded to the longest one"""

        length = max(len(packed) for packed in batch)
        ids = torch.full((len(batch), length), pad_id, dtype=torch.long)
        segments = torch.zeros((len(batch), length), dtype=torch.long)
        padding = torch.ones((len(batch), length), dtype=torch.bool)
        for row, packed in enumerate(batch):
            ids[row, :len(packed)] = packed.ids
            segments[row, :len(packed)] = packed.segment_ids
            padding[row, :len(packed)] = False

        return self(ids.to(self.device), segments.to(self.device), padding.to(self.device))


@dataclass
class EncodedDocument:
    inputs: DocumentInput
    vectors: torch.Tensor


def encode_document(encoder: TransformerEncoder, inputs: DocumentInput, window_size: int) -> EncodedDocument:
    """Encodes every window of the document and keeps each piece's most central vector"""

    ids = inputs.ids
    windows = make_windows(len(ids), window_size)
    if not windows:
        return EncodedDocument(inputs, torch.zeros((0, encoder.hidden_dim), device=encoder.device))

    per_window = [(window, encoder.encode(ids[window.start:window.end])) for window in windows]
    return EncodedDocument(inputs, merge_windows(per_window))


def load_pretrained(encoder: TransformerEncoder, path: str) -> TransformerEncoder:
    """Loads externally trained weights, keeping initial values for anything the file lacks"""

    try:
        state = torch.load(path, map_location="cpu")
    except (OSError, RuntimeError) as e:
        raise DataError(f"Unable to load pretrained encoder {path}: {e}") from e

    missing, unexpected = encoder.load_state_dict(state.get("encoder", state), strict=False)
    if missing:
        logger.warning(f"Pretrained encoder {path} lacks {len(missing)} parameters, e.g. {missing[:3]}")
    if unexpected:
        logger.warning(f"Ignoring {len(unexpected)} unexpected parameters from {path}")
    return encoder
