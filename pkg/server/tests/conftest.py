import os
import string

import pytest
import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers
from transformers import BertConfig, BertForMaskedLM, PreTrainedTokenizerFast

from mlmserve.server import ServedModel


def build_tiny_model_dir(path: str) -> str:
    """Randomly initialized miniature masked LM with a lowercase vocabulary,
    saved in transformers format so it loads like any hub model."""
    letters = list(string.ascii_lowercase)
    tokens = (["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
              + letters + ["##" + c for c in letters]
              + ["the", "cat", "dog", "sat", "ran", "hat", "map", "sun"])
    os.makedirs(path, exist_ok=True)
    backend = Tokenizer(models.WordPiece(
        vocab={t: i for i, t in enumerate(tokens)}, unk_token="[UNK]"))
    backend.normalizer = normalizers.Lowercase()
    backend.pre_tokenizer = pre_tokenizers.Whitespace()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend, unk_token="[UNK]", mask_token="[MASK]",
        cls_token="[CLS]", sep_token="[SEP]", pad_token="[PAD]")
    config = BertConfig(
        vocab_size=len(tokens),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=40,
    )
    torch.manual_seed(7)
    model = BertForMaskedLM(config)
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return path


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    override = os.environ.get("GSNPROBE_SMOKE_MODEL")
    if override:
        return override
    return build_tiny_model_dir(str(tmp_path_factory.mktemp("tiny") / "model"))


@pytest.fixture(scope="session")
def served(tiny_model_dir):
    return ServedModel(tiny_model_dir, device="cpu")
