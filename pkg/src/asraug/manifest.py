"""Manifest-based corpus management.

A manifest is UTF-8 JSON-lines: one flat object per utterance with
required keys `audio_filepath`, `duration`, `text` and optional
`speaker_id`, `gender`, `label_source`. Unknown keys survive a
read/write round trip byte-for-byte.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (DuplicatePath, InsufficientData, MissingField,
                     MissingGender, ParseError, TooSmall)

LABEL_SOURCES = ("gold", "noisy", "synthetic")
GENDERS = ("male", "female")

_CANONICAL_KEYS = ("audio_filepath", "duration", "text",
                   "speaker_id", "gender", "label_source")


@dataclass
class Utterance:
    audio_filepath: str
    duration: float
    text: str
    speaker_id: str | None = None
    gender: str | None = None
    label_source: str = "gold"
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be > 0, got %r for %r"
                             % (self.duration, self.audio_filepath))
        if self.label_source not in LABEL_SOURCES:
            raise ValueError("label_source must be one of %s, got %r"
                             % (LABEL_SOURCES, self.label_source))
        if self.gender is not None and self.gender not in GENDERS:
            raise ValueError("gender must be one of %s, got %r" % (GENDERS, self.gender))

    def resolve_path(self, base_dir: str | None) -> str:
        if os.path.isabs(self.audio_filepath) or not base_dir:
            return self.audio_filepath
        return os.path.join(base_dir, self.audio_filepath)

    def to_record(self) -> dict:
        rec = {"audio_filepath": self.audio_filepath,
               "duration": self.duration,
               "text": self.text}
        if self.speaker_id is not None:
            rec["speaker_id"] = self.speaker_id
        if self.gender is not None:
            rec["gender"] = self.gender
        rec["label_source"] = self.label_source
        rec.update(self.extras)
        return rec

    @classmethod
    def from_record(cls, rec: dict, where: str = "") -> "Utterance":
        for key in ("audio_filepath", "duration", "text"):
            if key not in rec:
                raise MissingField("record%s is missing %r" % (where, key))
        extras = {k: v for k, v in rec.items() if k not in _CANONICAL_KEYS}
        return cls(audio_filepath=rec["audio_filepath"],
                   duration=float(rec["duration"]),
                   text=rec["text"],
                   speaker_id=rec.get("speaker_id"),
                   gender=rec.get("gender"),
                   label_source=rec.get("label_source", "gold"),
                   extras=extras)


@dataclass
class Manifest:
    utterances: list[Utterance] = field(default_factory=list)
    provenance: str = ""
    source_path: str | None = None

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def __getitem__(self, i):
        return self.utterances[i]

    @property
    def total_duration(self) -> float:
        return sum(u.duration for u in self.utterances)

    @property
    def total_hours(self) -> float:
        return self.total_duration / 3600.0

    @property
    def base_dir(self) -> str | None:
        return os.path.dirname(self.source_path) if self.source_path else None

    def texts(self) -> list[str]:
        return [u.text for u in self.utterances]


def read_manifest(path) -> Manifest:
    utts = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError("%s line %d: %s" % (path, lineno, exc)) from exc
            if not isinstance(rec, dict):
                raise ParseError("%s line %d: expected an object" % (path, lineno))
            utts.append(Utterance.from_record(rec, " at %s line %d" % (path, lineno)))
    return Manifest(utts, source_path=str(path))


def write_manifest(manifest: Manifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for utt in manifest:
            fh.write(json.dumps(utt.to_record(), ensure_ascii=False))
            fh.write("\n")


def duration_hm(seconds: float) -> str:
    """Render a duration the way reports do, e.g. 44650 s -> '12h24m'."""
    minutes = int(round(seconds / 60.0))
    return "%dh%02dm" % (minutes // 60, minutes % 60)


@dataclass
class FilterStats:
    accepted: int = 0
    too_long: int = 0
    bad_charset: int = 0
    blocklisted: int = 0
    has_digit: int = 0

    @property
    def rejected(self) -> int:
        return self.too_long + self.bad_charset + self.blocklisted + self.has_digit


def filter_sentences(lines, charset, max_words: int = 30,
                     blocklist=frozenset()) -> tuple[list[str], FilterStats]:
    """Keep lines of <= max_words tokens, charset-clean, digit-free and
    with no blocklisted token. Order-preserving."""
    blocklist = set(blocklist)
    accepted = []
    stats = FilterStats()
    for line in lines:
        line = line.rstrip("\n")
        tokens = line.split()
        if len(tokens) > max_words:
            stats.too_long += 1
            continue
        if any(ch.isdigit() for ch in line):
            stats.has_digit += 1
            continue
        if any(ch != " " and ch not in charset for ch in line):
            stats.bad_charset += 1
            continue
        if any(tok in blocklist for tok in tokens):
            stats.blocklisted += 1
            continue
        accepted.append(line)
        stats.accepted += 1
    return accepted, stats


def _trim_to_budget(utts: list[Utterance], budget: float) -> list[Utterance]:
    """Greedy prefix of `utts` whose total stays <= budget.

    The shortfall is smaller than the first skipped utterance, which
    bounds the gender gap by one utterance's duration.
    """
    kept, acc = [], 0.0
    for utt in utts:
        if acc + utt.duration > budget:
            break
        kept.append(utt)
        acc += utt.duration
    return kept


def gender_balanced_sample(manifest: Manifest, target_hours: float,
                           seed: int = 0) -> Manifest:
    """Accumulate random male-female speaker pairs until the balanced
    total reaches target_hours; the heavier gender is trimmed at
    utterance granularity to the lighter one."""
    if target_hours <= 0:
        return Manifest([], provenance="gender-balanced sample (empty target)")
    # keyed by (speaker, gender) so inconsistently tagged speakers cannot
    # leak utterances across the gender accounting
    by_speaker: dict[tuple, list[Utterance]] = {}
    for utt in manifest:
        if utt.gender not in GENDERS:
            raise MissingGender("utterance %r lacks a male/female gender tag"
                                % utt.audio_filepath)
        spk = (utt.speaker_id or utt.audio_filepath, utt.gender)
        by_speaker.setdefault(spk, []).append(utt)

    males = sorted(s for s in by_speaker if s[1] == "male")
    females = sorted(s for s in by_speaker if s[1] == "female")
    rng = np.random.default_rng(seed)
    rng.shuffle(males)
    rng.shuffle(females)

    target_s = target_hours * 3600.0
    picked_m: list[Utterance] = []
    picked_f: list[Utterance] = []
    for m_spk, f_spk in zip(males, females):
        picked_m.extend(by_speaker[m_spk])
        picked_f.extend(by_speaker[f_spk])
        dur_m = sum(u.duration for u in picked_m)
        dur_f = sum(u.duration for u in picked_f)
        budget = min(dur_m, dur_f)
        if dur_m <= dur_f:
            males_out, females_out = picked_m, _trim_to_budget(picked_f, budget)
        else:
            males_out, females_out = _trim_to_budget(picked_m, budget), picked_f
        total = sum(u.duration for u in males_out + females_out)
        if total >= target_s:
            return Manifest(males_out + females_out,
                            provenance="gender-balanced sample, target %.3fh"
                                       % target_hours)
    raise InsufficientData(
        "cannot reach %.3f balanced hours with %d male / %d female speakers"
        % (target_hours, len(males), len(females)))


def split_train_test(manifest: Manifest, n_test: int = 250,
                     seed: int = 0) -> tuple[Manifest, Manifest]:
    """Uniform test draw of exactly n_test utterances; remainder trains."""
    if len(manifest) <= n_test:
        raise TooSmall("need more than %d utterances to hold out %d, got %d"
                       % (n_test, n_test, len(manifest)))
    rng = np.random.default_rng(seed)
    test_idx = set(rng.choice(len(manifest), size=n_test, replace=False).tolist())
    train = [u for i, u in enumerate(manifest) if i not in test_idx]
    test = [u for i, u in enumerate(manifest) if i in test_idx]
    return (Manifest(train, provenance="train split"),
            Manifest(test, provenance="test split"))


def mix_manifests(parts: list[tuple[Manifest, str]]) -> Manifest:
    """Concatenate manifests in order, stamping each utterance's source tag."""
    seen: set[str] = set()
    mixed: list[Utterance] = []
    for part, tag in parts:
        for utt in part:
            if utt.audio_filepath in seen:
                raise DuplicatePath("audio path %r occurs in more than one part"
                                    % utt.audio_filepath)
            seen.add(utt.audio_filepath)
            stamped = Utterance(audio_filepath=utt.resolve_path(part.base_dir),
                                duration=utt.duration, text=utt.text,
                                speaker_id=utt.speaker_id, gender=utt.gender,
                                label_source=utt.label_source,
                                extras={**utt.extras, "source_tag": tag})
            mixed.append(stamped)
    tags = ", ".join(tag for _, tag in parts)
    return Manifest(mixed, provenance="mixture of [%s]" % tags)
