"""Shared fixtures: tiny synthesized toy-language corpora on disk."""

import os

import pytest

from asraug.manifest import write_manifest
from asraug.synth import VoiceSpec, synthesize_corpus
from asraug.toylang import generate_toy_language


def make_toy_corpus(root, texts, voices, seed=0, prefix="toy"):
    """Synthesize texts round-robin over voices; returns the manifest."""
    assignments = [(t, voices[i % len(voices)]) for i, t in enumerate(texts)]
    return synthesize_corpus(assignments, root, seed=seed, name_prefix=prefix)


def split_manifest_files(manifest, out_dir, n_test, seed=0):
    """Write train/test manifest files from one synthesized manifest."""
    from asraug.manifest import split_train_test
    train, test = split_train_test(manifest, n_test=n_test, seed=seed)
    # keep audio resolvable from the new manifest locations; the toy
    # transcripts are exact, so the splits act as the gold corpus
    for part in (train, test):
        for utt in part:
            utt.audio_filepath = os.path.abspath(
                os.path.join(manifest.base_dir, utt.audio_filepath))
            utt.label_source = "gold"
    train_path = os.path.join(out_dir, "train.jsonl")
    test_path = os.path.join(out_dir, "test.jsonl")
    write_manifest(train, train_path)
    write_manifest(test, test_path)
    return train_path, test_path


@pytest.fixture(scope="session")
def toy_setup(tmp_path_factory):
    """A small train/test toy corpus plus a separate unlabeled corpus."""
    root = tmp_path_factory.mktemp("toy")
    texts = generate_toy_language(seed=11, vocab_size=8, n_sentences=26,
                                  words_per_sentence_range=(2, 3))
    neutral = VoiceSpec("male", 0, 0, "m000")
    main = make_toy_corpus(str(root / "main"), texts[:20], [neutral], seed=1)
    train_path, test_path = split_manifest_files(main, str(root), n_test=6,
                                                 seed=2)
    other_voice = VoiceSpec("female", 8, 1, "f000")
    books = make_toy_corpus(str(root / "books"), texts[20:], [other_voice],
                            seed=3, prefix="books")
    return {
        "root": str(root),
        "train": train_path,
        "test": test_path,
        "books": os.path.join(str(root / "books"), "manifest.jsonl"),
        "texts": texts,
    }
