import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

import pytest


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    """A local 8-dimensional transformer encoder directory."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizerFast

    directory = tmp_path_factory.mktemp("tiny-encoder")
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=64, hidden_size=8, num_hidden_layers=1,
        num_attention_heads=2, intermediate_size=16,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(directory)
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + [
        f"tok{i}" for i in range(59)
    ]
    (directory / "vocab.txt").write_text("\n".join(vocab) + "\n",
                                         encoding="utf-8")
    BertTokenizerFast(vocab_file=str(directory / "vocab.txt")).save_pretrained(
        directory
    )
    return directory


POLICY_A = """<?xml version='1.0' encoding='utf-8'?>
<policy source="doc-a">
  <segment level="1">
    <title id="n0001">1. How data is collected</title>
    <paragraph id="n0002">We collect what you type into forms.</paragraph>
    <paragraph id="n0003"></paragraph>
  </segment>
</policy>
"""

POLICY_B = """<?xml version='1.0' encoding='utf-8'?>
<policy source="doc-b">
  <segment level="1">
    <title id="n0001">1. Sharing</title>
    <paragraph id="n0002">Shared with the parties below:<list>
        <item>advertisers</item>
        <item>affiliates</item>
      </list></paragraph>
  </segment>
</policy>
"""


@pytest.fixture()
def corpus_dir(tmp_path):
    directory = tmp_path / "corpus"
    directory.mkdir()
    (directory / "doc-a.ppxml").write_text(POLICY_A, encoding="utf-8")
    (directory / "doc-b.ppxml").write_text(POLICY_B, encoding="utf-8")
    return directory
