"""Desk-scale laboratory for low-resource ASR data augmentation."""

__version__ = "0.1.0"

from .audio import AudioClip, add_dither, decode_wav, encode_wav, read_wav, write_wav
from .augment import (LARGE, OFF, SMALL, SpecAugment, SpecAugmentPolicy,
                      apply_specaugment, choose_policy)
from .experiment import (CycleState, ExperimentConfig, PretrainSource,
                         run_baseline, run_cycles, run_mixture, transcribe_corpus)
from .frontend import (FrontendConfig, LogMelFrontend, extract_features, log_mel,
                       mel_filterbank, normalize_per_feature, pad_to_multiple, stft)
from .lm import NGramLM, beam_decode, bias_demo, lm_score, train_lm
from .manifest import (Manifest, Utterance, filter_sentences, gender_balanced_sample,
                       mix_manifests, read_manifest, split_train_test, write_manifest)
from .metrics import ScoreReport, cer, levenshtein, score, wer
from .net import (Checkpoint, ModelConfig, TrainConfig, ctc_loss, greedy_decode,
                  load_checkpoint, novograd_step, save_checkpoint)
from .recognizer import CTCRecognizer
from .synth import (G2PRules, SynthRecipe, VoiceSpec, build_synthetic_corpus,
                    g2p, recipe_summary, synthesize_utterance)
from .text import Charset, build_charset
from .toylang import generate_toy_language

__all__ = [
    "AudioClip", "add_dither", "decode_wav", "encode_wav", "read_wav", "write_wav",
    "SpecAugment", "SpecAugmentPolicy", "apply_specaugment", "choose_policy",
    "SMALL", "LARGE", "OFF",
    "CycleState", "ExperimentConfig", "PretrainSource",
    "run_baseline", "run_cycles", "run_mixture", "transcribe_corpus",
    "FrontendConfig", "LogMelFrontend", "extract_features", "log_mel",
    "mel_filterbank", "normalize_per_feature", "pad_to_multiple", "stft",
    "NGramLM", "beam_decode", "bias_demo", "lm_score", "train_lm",
    "Manifest", "Utterance", "filter_sentences", "gender_balanced_sample",
    "mix_manifests", "read_manifest", "split_train_test", "write_manifest",
    "ScoreReport", "cer", "levenshtein", "score", "wer",
    "Checkpoint", "ModelConfig", "TrainConfig", "ctc_loss", "greedy_decode",
    "load_checkpoint", "novograd_step", "save_checkpoint",
    "CTCRecognizer",
    "G2PRules", "SynthRecipe", "VoiceSpec", "build_synthetic_corpus", "g2p",
    "recipe_summary", "synthesize_utterance",
    "Charset", "build_charset",
    "generate_toy_language",
]
