"""Deterministic parametric toy text-to-speech.

A rule-based G2P (longest-match graphemes with word-level exceptions)
feeds a formant-parametric segment synthesizer: vowels and sonorants
are harmonic tones shaped by two resonances, fricatives are spectrally
shaped noise, stops are a closure gap plus a burst. Segments of 90 ms
(scaled by the voice's rate step) are joined with 10 ms crossfades.

Fidelity is deliberately low; the corpus recipe only needs speech-like,
reproducible audio with controllable pitch and rate.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .audio import SAMPLE_RATE, AudioClip, write_wav
from .errors import PoolTooSmall, UnmappableCharacter
from .manifest import Manifest, Utterance, read_manifest, write_manifest
from .rng import derive_rng

PITCH_STEPS = tuple(range(-20, 21, 2))   # 21 values spanning [-20, 20]
RATE_STEPS = tuple(range(-2, 3))         # 5 values spanning [-2, 2]
BASE_F0 = {"male": 120.0, "female": 210.0}

BASE_SEGMENT_S = 0.090
CROSSFADE_S = 0.010
PEAK_TARGET = 0.30

# phone -> (kind, parameters); formant pairs in Hz, noise (center, bandwidth),
# stops carry a burst center
PHONES = {
    "a": ("vowel", (730.0, 1090.0)),
    "e": ("vowel", (530.0, 1840.0)),
    "i": ("vowel", (270.0, 2290.0)),
    "o": ("vowel", (570.0, 840.0)),
    "u": ("vowel", (300.0, 870.0)),
    "m": ("nasal", (250.0, 900.0)),
    "n": ("nasal", (320.0, 1100.0)),
    "l": ("sonorant", (380.0, 1200.0)),
    "r": ("sonorant", (460.0, 1300.0)),
    "j": ("sonorant", (300.0, 2200.0)),
    "w": ("sonorant", (350.0, 800.0)),
    "f": ("fricative", (4600.0, 2200.0)),
    "v": ("fricative", (3900.0, 2000.0)),
    "s": ("fricative", (6200.0, 1800.0)),
    "z": ("fricative", (5800.0, 1800.0)),
    "sh": ("fricative", (3100.0, 1600.0)),
    "h": ("fricative", (1700.0, 1400.0)),
    "hh": ("fricative", (1400.0, 1200.0)),   # pharyngeal-ish
    "p": ("stop", 1400.0),
    "b": ("stop", 800.0),
    "t": ("stop", 3600.0),
    "d": ("stop", 2600.0),
    "k": ("stop", 2000.0),
    "g": ("stop", 1200.0),
    "q": ("stop", 700.0),                     # glottal
    "ch": ("affricate", (3200.0, 1600.0)),
    "jh": ("affricate", (2600.0, 1500.0)),
    "ts": ("affricate", (5800.0, 1800.0)),
    "pau": ("pause", None),
}


@dataclass(frozen=True)
class VoiceSpec:
    gender: str
    pitch_step: int = 0
    rate_step: int = 0
    voice_id: str = "v0"

    def __post_init__(self):
        if self.gender not in BASE_F0:
            raise ValueError("gender must be male or female, got %r" % self.gender)
        if self.pitch_step not in PITCH_STEPS:
            raise ValueError("pitch_step must be in [-20, 20], got %r" % self.pitch_step)
        if self.rate_step not in RATE_STEPS:
            raise ValueError("rate_step must be in [-2, 2], got %r" % self.rate_step)

    @property
    def base_f0(self) -> float:
        return BASE_F0[self.gender]

    @property
    def f0(self) -> float:
        # quarter-semitone steps
        return self.base_f0 * 2.0 ** (self.pitch_step / 24.0)

    @property
    def rate_factor(self) -> float:
        return 2.0 ** (-self.rate_step / 4.0)


@dataclass
class G2PRules:
    """Ordered grapheme map (digraphs before single letters) plus word
    exceptions applied before any grapheme rule."""

    mapping: dict
    exceptions: dict = field(default_factory=dict)

    def graphemes_by_length(self):
        return sorted(self.mapping, key=len, reverse=True)


def default_rules() -> G2PRules:
    """Maltese-inspired ruleset: mostly one-to-one, digraphs first."""
    mapping = {
        "għ": (),            # silent
        "ie": ("i", "i"),    # long vowel
        "a": ("a",), "e": ("e",), "i": ("i",), "o": ("o",), "u": ("u",),
        "b": ("b",), "d": ("d",), "f": ("f",), "g": ("g",), "h": (),
        "j": ("j",), "k": ("k",), "l": ("l",), "m": ("m",), "n": ("n",),
        "p": ("p",), "q": ("q",), "r": ("r",), "s": ("s",), "t": ("t",),
        "v": ("v",), "w": ("w",), "x": ("sh",), "z": ("ts",),
        "ċ": ("ch",), "ġ": ("jh",), "ħ": ("hh",), "ż": ("z",),
        "'": (),
    }
    return G2PRules(mapping=mapping)


def g2p(text: str, rules: G2PRules) -> list[str]:
    """Phone sequence for `text`; words separated by the pause phone."""
    phones: list[str] = []
    graphemes = rules.graphemes_by_length()
    pos = 0
    first_word = True
    for raw_word in text.split(" "):
        if not first_word:
            phones.append("pau")
        first_word = False
        word = raw_word
        if word and word in rules.exceptions:
            phones.extend(rules.exceptions[word])
            pos += len(raw_word) + 1
            continue
        i = 0
        while i < len(word):
            for g in graphemes:
                if word.startswith(g, i):
                    phones.extend(rules.mapping[g])
                    i += len(g)
                    break
            else:
                raise UnmappableCharacter("no rule for %r at position %d"
                                          % (word[i], pos + i))
        pos += len(raw_word) + 1
    return phones


def _resonance_envelope(freqs, formants):
    f1, f2 = formants
    env = 1.0 / (1.0 + ((freqs - f1) / 130.0) ** 2) \
        + 0.55 / (1.0 + ((freqs - f2) / 200.0) ** 2)
    return env


def _harmonic_segment(n, f0, formants, gain):
    t = np.arange(n) / SAMPLE_RATE
    max_harmonic = int((SAMPLE_RATE / 2.0 - 200.0) / f0)
    k = np.arange(1, max_harmonic + 1)
    amps = _resonance_envelope(k * f0, formants) / np.sqrt(k)
    seg = (amps[:, None] * np.sin(2.0 * np.pi * f0 * k[:, None] * t[None, :])).sum(axis=0)
    rms = np.sqrt(np.mean(seg ** 2))
    return gain * seg / max(rms, 1e-12)


def _shaped_noise(n, center, bandwidth, gain, rng):
    noise = rng.standard_normal(n)
    spec = np.fft.rfft(noise)
    freqs = np.fft.rfftfreq(n, d=1.0 / SAMPLE_RATE)
    spec *= np.exp(-0.5 * ((freqs - center) / bandwidth) ** 2) + 0.01
    seg = np.fft.irfft(spec, n=n)
    rms = np.sqrt(np.mean(seg ** 2))
    return gain * seg / max(rms, 1e-12)


def _segment(phone, n, voice, rng):
    kind, params = PHONES[phone]
    if kind == "pause":
        return np.zeros(n)
    if kind == "vowel":
        return _harmonic_segment(n, voice.f0, params, 0.16)
    if kind == "nasal":
        return _harmonic_segment(n, voice.f0, params, 0.07)
    if kind == "sonorant":
        return _harmonic_segment(n, voice.f0, params, 0.11)
    if kind == "fricative":
        return _shaped_noise(n, params[0], params[1], 0.06, rng)
    if kind == "stop":
        gap = int(n * 0.55)
        burst = _shaped_noise(n - gap, params, 1500.0, 0.10, rng)
        burst *= np.exp(-np.arange(n - gap) / (0.012 * SAMPLE_RATE))
        return np.concatenate([np.zeros(gap), burst])
    if kind == "affricate":
        gap = int(n * 0.35)
        return np.concatenate([np.zeros(gap),
                               _shaped_noise(n - gap, params[0], params[1],
                                             0.07, rng)])
    raise ValueError("unknown phone kind %r" % kind)


def synthesize_utterance(text: str, voice: VoiceSpec, rules: G2PRules | None = None,
                         rng: np.random.Generator | None = None) -> AudioClip:
    """Deterministic render of `text` with `voice` at 16 kHz mono."""
    rules = rules or default_rules()
    rng = rng or np.random.default_rng(0)
    phones = g2p(text, rules)
    if not phones:
        phones = ["pau"]
    seg_n = max(int(round(BASE_SEGMENT_S * voice.rate_factor * SAMPLE_RATE)), 8)
    fade_n = min(int(round(CROSSFADE_S * voice.rate_factor * SAMPLE_RATE)),
                 seg_n // 2)
    total = seg_n * len(phones) - fade_n * (len(phones) - 1)
    out = np.zeros(total)
    ramp = np.linspace(0.0, 1.0, fade_n) if fade_n else np.zeros(0)
    pos = 0
    for idx, phone in enumerate(phones):
        seg = _segment(phone, seg_n, voice, rng)
        if idx == 0:
            out[:seg_n] = seg
            pos = seg_n
            continue
        start = pos - fade_n
        out[start:pos] = out[start:pos] * (1.0 - ramp) + seg[:fade_n] * ramp
        out[pos:pos + seg_n - fade_n] = seg[fade_n:]
        pos += seg_n - fade_n
    peak = np.max(np.abs(out))
    if peak > 1e-9:
        out = out * (PEAK_TARGET / peak)
    return AudioClip(out)


def estimate_f0(clip: AudioClip, fmin: float = 50.0, fmax: float = 450.0) -> float:
    """Autocorrelation pitch estimate over the whole clip."""
    x = clip.samples - np.mean(clip.samples)
    ac = np.correlate(x, x, mode="full")[len(x) - 1:]
    lo = int(SAMPLE_RATE / fmax)
    hi = min(int(SAMPLE_RATE / fmin), len(ac) - 1)
    lag = lo + int(np.argmax(ac[lo:hi + 1]))
    return SAMPLE_RATE / lag


# --- voice grids and the synthetic-corpus recipe -----------------------

def voice_grid(n_per_gender: int, seed: int = 0) -> list[VoiceSpec]:
    """Voices spread uniformly over the 21 x 5 (pitch, rate) grid.

    With n_per_gender == 105 every cell is used exactly once per gender;
    smaller counts take a seeded sample of distinct cells, larger counts
    cycle through the grid again.
    """
    cells = [(p, r) for p in PITCH_STEPS for r in RATE_STEPS]
    voices = []
    for gender in ("male", "female"):
        order = derive_rng(seed, "voices", gender).permutation(len(cells))
        for v in range(n_per_gender):
            pitch, rate = cells[order[v % len(cells)]]
            voices.append(VoiceSpec(gender=gender, pitch_step=pitch,
                                    rate_step=rate,
                                    voice_id="%s%03d" % (gender[0], v)))
    return voices


@dataclass(frozen=True)
class SynthRecipe:
    n_voices_per_gender: int = 105
    utterances_per_voice: int = 250
    words_per_utterance: int = 13
    seed: int = 0

    def __post_init__(self):
        if self.n_voices_per_gender < 1:
            raise ValueError("need at least one voice per gender")


FULL_SCALE_RECIPE = SynthRecipe()
DESK_RECIPE = SynthRecipe(n_voices_per_gender=4, utterances_per_voice=25,
                          words_per_utterance=5)


def recipe_summary(recipe: SynthRecipe) -> dict:
    """Config arithmetic only: voice/utterance totals and grid coverage."""
    voices = voice_grid(recipe.n_voices_per_gender, recipe.seed)
    coverage = {}
    for gender in ("male", "female"):
        cells = {(v.pitch_step, v.rate_step) for v in voices if v.gender == gender}
        coverage[gender] = len(cells)
    return {
        "n_voices": len(voices),
        "n_utterances": len(voices) * recipe.utterances_per_voice,
        "grid_cells": len(PITCH_STEPS) * len(RATE_STEPS),
        "cells_covered": coverage,
        "pitch_values": len(PITCH_STEPS),
        "rate_values": len(RATE_STEPS),
    }


def synthesize_corpus(assignments: list[tuple[str, VoiceSpec]], out_dir,
                      rules: G2PRules | None = None, seed: int = 0,
                      name_prefix: str = "synth") -> Manifest:
    """Render (text, voice) pairs to WAVs plus a manifest in out_dir."""
    rules = rules or default_rules()
    os.makedirs(out_dir, exist_ok=True)
    utts = []
    for i, (text, voice) in enumerate(assignments):
        clip = synthesize_utterance(text, voice, rules,
                                    derive_rng(seed, "utt", voice.voice_id, i))
        name = "%s_%s_%05d.wav" % (name_prefix, voice.voice_id, i)
        write_wav(os.path.join(out_dir, name), clip)
        utts.append(Utterance(audio_filepath=name,
                              duration=round(clip.duration, 3), text=text,
                              speaker_id=voice.voice_id, gender=voice.gender,
                              label_source="synthetic"))
    manifest = Manifest(utts, provenance="parametric synthesis")
    manifest_path = os.path.join(out_dir, "manifest.jsonl")
    write_manifest(manifest, manifest_path)
    # re-read so the returned manifest resolves audio paths via its file
    return read_manifest(manifest_path)


def build_synthetic_corpus(recipe: SynthRecipe, sentence_pool: list[str],
                           out_dir, rules: G2PRules | None = None) -> Manifest:
    """Realize a recipe: voices over the pitch/rate grid, each assigned
    `utterances_per_voice` sentences of exactly `words_per_utterance`
    words, sampled without replacement within a voice."""
    eligible = [s for s in sentence_pool
                if len(s.split()) == recipe.words_per_utterance]
    if len(eligible) < recipe.utterances_per_voice:
        raise PoolTooSmall(
            "need %d sentences of %d words per voice, pool has %d eligible"
            % (recipe.utterances_per_voice, recipe.words_per_utterance,
               len(eligible)))
    voices = voice_grid(recipe.n_voices_per_gender, recipe.seed)
    assignments = []
    for voice in voices:
        rng = derive_rng(recipe.seed, "sentences", voice.voice_id)
        picks = rng.choice(len(eligible), size=recipe.utterances_per_voice,
                           replace=False)
        assignments.extend((eligible[int(p)], voice) for p in picks)
    return synthesize_corpus(assignments, out_dir, rules, recipe.seed)
