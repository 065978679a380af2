import os

import pytest
import torch

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

TOY_SENTENCES = {
    "aaa": ["the cat sat", "a dog ran", "birds fly high", "we eat bread",
            "she reads books", "rain falls down", "he walks home",
            "fish swim fast", "stars shine bright", "kids play games"],
    "bbb": ["le chat assis", "un chien court", "des oiseaux volent",
            "nous mangeons du pain", "elle lit des livres", "la pluie tombe",
            "il marche chez lui", "les poissons nagent", "les etoiles brillent",
            "les enfants jouent"],
}


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small randomly initialized encoder saved locally (no hub access)."""
    from transformers import BertConfig, BertModel, BertTokenizerFast

    d = tmp_path_factory.mktemp("tiny_encoder")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += list("abcdefghijklmnopqrstuvwxyz")
    (d / "vocab.txt").write_text("\n".join(vocab), encoding="utf-8")

    torch.manual_seed(1234)
    config = BertConfig(vocab_size=len(vocab), hidden_size=32,
                        num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=64, max_position_embeddings=64)
    BertModel(config).save_pretrained(d)
    BertTokenizerFast(vocab_file=str(d / "vocab.txt")).save_pretrained(d)
    return d


@pytest.fixture
def toy_corpus(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for lang, lines in TOY_SENTENCES.items():
        (corpus / f"{lang}.txt").write_text("\n".join(lines) + "\n",
                                            encoding="utf-8")
    return corpus
