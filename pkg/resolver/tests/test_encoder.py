import pytest
import torch
from torch.autograd import gradcheck

from coref.config import EncoderConfig, PreprocessConfig
from coref.encoder import (FRAMING_OVERHEAD, RESERVED, PackedSequence, TransformerEncoder, Vocabulary,
                           encode_document, load_pretrained, pack)
from coref.errors import ContractViolation, DataError, VocabularyMismatchError
from coref.preprocess import prepare_document
from coref.proposal import FeedForwardScorer

from conftest import make_doc

TAGS = PreprocessConfig().tags


@pytest.fixture
def small_vocab():
    return Vocabulary.build(["cat", "dog", "dog", "Cat"], TAGS)


def tiny_encoder(vocab_size=20, hidden=16, layers=2, heads=4, positions=32, seed=0):
    torch.manual_seed(seed)
    encoder = TransformerEncoder(EncoderConfig(vocab_size=vocab_size, hidden_dim=hidden, num_layers=layers,
                                               num_heads=heads, max_positions=positions, dropout=0.0))
    return encoder.eval()


class TestVocabulary:
    def test_layout(self, small_vocab):
        assert small_vocab.pieces[:8] == list(RESERVED) + list(TAGS)
        assert (small_vocab.pad_id, small_vocab.unk_id, small_vocab.cls_id, small_vocab.sep_id) == (0, 1, 2, 3)
        # Words follow the initials and continuations, most frequent first
        assert small_vocab.pieces[-2:] == ["cat", "dog"]

    def test_tokenize(self, small_vocab):
        index = small_vocab.index
        assert small_vocab.tokenize("DOG") == [index["dog"]]
        assert small_vocab.tokenize("cog") == [index["c"], index["##o"], index["##g"]]
        assert small_vocab.tokenize("<mention>") == [index["<mention>"]]
        assert small_vocab.tokenize("dqg") == [index["d"], small_vocab.unk_id, index["##g"]]
        assert small_vocab.detokenize(small_vocab.tokenize("cog")) == "cog"

    def test_align(self, small_vocab):
        ids, first, last = small_vocab.align(["cat", "cog", "dog"])
        assert len(ids) == 5
        assert first == [0, 1, 4] and last == [0, 3, 4]

    def test_save_and_load(self, small_vocab, tmp_path):
        path = str(tmp_path / "vocab.txt")
        small_vocab.save(path)
        assert Vocabulary.load(path, TAGS) == small_vocab

    def test_load_with_other_tags(self, small_vocab, tmp_path):
        path = str(tmp_path / "vocab.txt")
        small_vocab.save(path)
        with pytest.raises(VocabularyMismatchError):
            Vocabulary.load(path, ("<s>", "</s>", "<m>", "</m>"))

    def test_wrong_prefix(self):
        with pytest.raises(VocabularyMismatchError):
            Vocabulary(["cat"] + list(RESERVED) + list(TAGS), TAGS)

    def test_duplicates(self):
        with pytest.raises(DataError):
            Vocabulary(list(RESERVED) + list(TAGS) + ["cat", "cat"], TAGS)

    def test_max_size(self):
        vocab = Vocabulary.build(["ab", "ab", "cd"], TAGS, max_size=13)
        assert len(vocab) == 13
        assert "ab" in vocab.index and "cd" not in vocab.index


class TestPack:
    def test_layout(self):
        packed = pack([10, 11], [20, 21, 22], cls_id=2, sep_id=3)
        assert packed.ids.tolist() == [2, 10, 11, 3, 20, 21, 22, 3]
        assert packed.segment_ids.tolist() == [0, 0, 0, 0, 1, 1, 1, 1]
        assert packed.context_offset == 4
        assert packed.context_length == 3
        assert len(packed) == 2 + 3 + FRAMING_OVERHEAD


class TestTransformerEncoder:
    def test_shape_and_determinism(self):
        encoder = tiny_encoder()
        ids = torch.tensor([2, 5, 6, 7, 3])
        first = encoder.encode(ids)
        assert first.shape == (5, 16)
        assert torch.equal(first, encoder.encode(ids))

    def test_conditioned_on_segments(self):
        encoder = tiny_encoder()
        a = pack([5, 6], [7, 8], 2, 3)
        b = PackedSequence(a.ids, torch.zeros_like(a.segment_ids), a.context_offset)
        assert not torch.allclose(encoder.encode_packed(a), encoder.encode_packed(b))

    @pytest.mark.parametrize("first, second", [(1, 6), (0, 7), (2, 5)])
    def test_contextual(self, first, second):
        encoder = tiny_encoder()
        ids = torch.tensor([2, 5, 6, 7, 8, 9, 10, 3])
        swapped = ids.clone()
        swapped[[first, second]] = ids[[second, first]]
        untouched = next(p for p in range(len(ids)) if p not in (first, second))
        with torch.no_grad():
            before, after = encoder.encode(ids), encoder.encode(swapped)
        # The piece at untouched is the same, only its context moved
        assert ids[untouched] == swapped[untouched]
        assert not torch.allclose(before[untouched], after[untouched], atol=1e-6)

    def test_batch_matches_single(self):
        encoder = tiny_encoder()
        short, long = pack([5], [7, 8], 2, 3), pack([5, 6, 9], [7, 8, 10, 11], 2, 3)
        batch = encoder.encode_batch([short, long])
        assert batch.shape == (2, len(long), 16)
        torch.testing.assert_close(batch[0, :len(short)], encoder.encode_packed(short), atol=1e-5, rtol=1e-5)
        torch.testing.assert_close(batch[1], encoder.encode_packed(long), atol=1e-5, rtol=1e-5)

    def test_overlength(self):
        encoder = tiny_encoder(positions=8)
        with pytest.raises(ContractViolation, match="max_positions"):
            encoder.encode(torch.ones(9, dtype=torch.long))

    def test_gradients_match_finite_differences(self):
        encoder = tiny_encoder(hidden=8, layers=1, heads=2, positions=8).double().train()
        torch.manual_seed(1)
        embeds = torch.randn(1, 5, 8, dtype=torch.float64, requires_grad=True)
        segments = torch.tensor([[0, 0, 0, 1, 1]])
        assert gradcheck(lambda x: encoder(segment_ids=segments, inputs_embeds=x), (embeds,), eps=1e-6, atol=1e-6)

    def test_head_gradients_match_finite_differences(self):
        torch.manual_seed(2)
        head = FeedForwardScorer(6, 6).double()
        x = torch.randn(24, 6, dtype=torch.float64, requires_grad=True)
        assert gradcheck(head, (x,), eps=1e-6, atol=1e-6)

    def test_load_pretrained(self, tmp_path):
        source = tiny_encoder(seed=3)
        path = str(tmp_path / "encoder.pt")
        state = {k: v for k, v in source.state_dict().items() if not k.startswith("segment_embeddings")}
        torch.save({"encoder": state}, path)

        target = tiny_encoder(seed=4)
        before = target.segment_embeddings.weight.clone()
        load_pretrained(target, path)
        assert torch.equal(target.token_embeddings.weight, source.token_embeddings.weight)
        assert torch.equal(target.segment_embeddings.weight, before)

    def test_load_pretrained_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_pretrained(tiny_encoder(), str(tmp_path / "absent.pt"))


class TestEncodeDocument:
    @pytest.fixture
    def setup(self):
        words = [f"w{i % 7}" for i in range(40)]
        doc = make_doc([words[:20], words[20:]])
        vocab = Vocabulary.build(words, TAGS)
        inputs = prepare_document(doc, vocab, PreprocessConfig(window_size=16))
        return tiny_encoder(vocab_size=len(vocab), positions=64), inputs

    def test_single_window_is_bit_exact(self, setup):
        encoder, inputs = setup
        with torch.no_grad():
            merged = encode_document(encoder, inputs, window_size=64).vectors
            assert torch.equal(merged, encoder.encode(inputs.ids))

    def test_windows_cover_every_piece(self, setup):
        encoder, inputs = setup
        with torch.no_grad():
            merged = encode_document(encoder, inputs, window_size=16).vectors
            assert merged.shape == (len(inputs), 16)
            assert torch.equal(merged[0], encoder.encode(inputs.ids[:16])[0])
            assert torch.equal(merged[-1], encoder.encode(inputs.ids[-16:])[-1])

    def test_empty_document(self):
        encoder = tiny_encoder()
        vocab = Vocabulary.build(["a"], TAGS)
        inputs = prepare_document(make_doc([]), vocab, PreprocessConfig())
        assert encode_document(encoder, inputs, 16).vectors.shape == (0, 16)
