"""Experiment orchestration: pretrain/fine-tune shapes with reporting.

Every experiment is a sequence of stages in a private working directory
`<workdir>/<name>/cycle<i>/`. Noisy sources carry audio only: their
transcripts are regenerated each cycle by the latest fine-tuned model.
The test manifest is used exclusively for scoring; every training or
transcription input is audited against it.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import os
from dataclasses import dataclass, field

from .augment import SpecAugmentPolicy, choose_policy, policy_by_name
from .errors import AudioUnreadable, ConfigInvalid, DataError
from .frontend import FrontendConfig, extract_features
from .manifest import Manifest, Utterance, mix_manifests, read_manifest, write_manifest
from .metrics import ScoreReport, score
from .net.checkpoint import Checkpoint, save_checkpoint
from .net.network import ModelConfig, init_params
from .net.training import TrainConfig, predict_features, train_on_manifest
from .audio import read_wav
from .rng import derive_seed
from .text import Charset, build_charset

LABEL_MODES = ("gold", "noisy", "synthetic")


@dataclass
class PretrainSource:
    manifest_path: str
    label_mode: str
    tag: str = ""

    def __post_init__(self):
        if self.label_mode not in LABEL_MODES:
            raise ConfigInvalid("label mode must be one of %s, got %r"
                                % (LABEL_MODES, self.label_mode))
        if not self.tag:
            stem = os.path.basename(self.manifest_path)
            self.tag = stem.split(".")[0] or "src"


@dataclass
class ExperimentConfig:
    name: str
    workdir: str
    finetune_manifest: str
    test_manifest: str
    pretrain_sources: list = field(default_factory=list)
    n_cycles: int = 3
    model_preset: str = "tiny"
    dropout: float = 0.2
    pretrain: TrainConfig = field(default_factory=TrainConfig)
    finetune: TrainConfig = field(default_factory=TrainConfig)
    pretrain_specaugment: str = "auto"
    finetune_specaugment: str = "auto"
    dither: float = 1e-5
    seed: int = 7
    # each cycle's pretraining starts from fresh weights by default;
    # set True to resume from the previous cycle's pretrained model
    warm_start_pretrain: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.n_cycles < 0:
            raise ConfigInvalid("n_cycles must be >= 0")
        if os.path.abspath(self.finetune_manifest) == os.path.abspath(self.test_manifest):
            raise ConfigInvalid("fine-tune and test manifests must be disjoint")
        for src in self.pretrain_sources:
            if os.path.abspath(src.manifest_path) == os.path.abspath(self.test_manifest):
                raise ConfigInvalid("pretrain source %r is the test manifest" % src.tag)
        return self

    @property
    def exp_dir(self) -> str:
        return os.path.join(self.workdir, self.name)


def config_to_ini(cfg: ExperimentConfig) -> str:
    """Fully resolved INI rendering, written next to every run's outputs."""
    cp = configparser.ConfigParser()
    cp["experiment"] = {
        "name": cfg.name,
        "workdir": cfg.workdir,
        "n_cycles": str(cfg.n_cycles),
        "seed": str(cfg.seed),
        "dither": repr(cfg.dither),
    }
    cp["model"] = {"preset": cfg.model_preset, "dropout": repr(cfg.dropout)}
    cp["pretrain"] = {
        "sources": " ".join("%s:%s" % (s.label_mode, s.manifest_path)
                            for s in cfg.pretrain_sources),
        "specaugment": cfg.pretrain_specaugment,
        "batch_size": str(cfg.pretrain.batch_size),
        "epochs": str(cfg.pretrain.epochs),
        "learning_rate": repr(cfg.pretrain.learning_rate),
    }
    cp["finetune"] = {
        "manifest": cfg.finetune_manifest,
        "specaugment": cfg.finetune_specaugment,
        "batch_size": str(cfg.finetune.batch_size),
        "epochs": str(cfg.finetune.epochs),
        "learning_rate": repr(cfg.finetune.learning_rate),
    }
    cp["test"] = {"manifest": cfg.test_manifest}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


@dataclass
class CycleState:
    cycle_index: int
    tag: str
    checkpoint_path: str
    noisy_manifests: list = field(default_factory=list)
    stage_history: list = field(default_factory=list)  # {"stage","loss","wer"?}
    loss: float = float("nan")
    wer: float = float("nan")
    trained_on: list = field(default_factory=list)
    transcribed: list = field(default_factory=list)

    def to_record(self) -> dict:
        return {"data": self.tag, "cycle": self.cycle_index,
                "loss": self.loss, "wer": self.wer,
                "checkpoint": self.checkpoint_path,
                "noisy_manifests": self.noisy_manifests,
                "stages": self.stage_history}


def _policy_for(name: str, stage: str, hours: float) -> SpecAugmentPolicy:
    if name == "auto":
        return choose_policy(stage, hours)
    return policy_by_name(name)


def _audit(cfg: ExperimentConfig, path, state: CycleState, kind: str) -> str:
    resolved = os.path.abspath(str(path))
    if resolved == os.path.abspath(cfg.test_manifest):
        raise ConfigInvalid("test manifest must never be used for %s" % kind)
    getattr(state, kind).append(resolved)
    return resolved


def transcribe_corpus(ckpt: Checkpoint, audio_manifest: Manifest,
                      frontend_cfg: FrontendConfig | None = None,
                      batch_size: int = 32,
                      n_threads: int = 1) -> tuple[Manifest, dict]:
    """Greedy-transcribe every utterance; returns (noisy manifest, stats).

    Unreadable audio is skipped and counted (hard failure above 50%);
    utterances decoding to empty text are dropped and counted. Feature
    extraction is order-preserving, so threading never changes results.
    """
    frontend_cfg = frontend_cfg or FrontendConfig()

    def load_one(utt):
        try:
            clip = read_wav(utt.resolve_path(audio_manifest.base_dir))
        except (OSError, DataError):
            return None
        return extract_features(clip, frontend_cfg)

    if n_threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            loaded = list(pool.map(load_one, audio_manifest))
    else:
        loaded = [load_one(u) for u in audio_manifest]
    feats, kept = [], []
    unreadable = 0
    for utt, f in zip(audio_manifest, loaded):
        if f is None:
            unreadable += 1
            continue
        feats.append(f)
        kept.append(utt)
    if len(audio_manifest) and unreadable > len(audio_manifest) / 2:
        raise AudioUnreadable("%d of %d utterances unreadable"
                              % (unreadable, len(audio_manifest)))
    hyps = predict_features(ckpt.params, ckpt.model_config, feats,
                            ckpt.charset, batch_size)
    utts, dropped_empty = [], 0
    for utt, hyp in zip(kept, hyps):
        if not hyp.strip():
            dropped_empty += 1
            continue
        utts.append(Utterance(
            audio_filepath=os.path.abspath(utt.resolve_path(audio_manifest.base_dir)),
            duration=utt.duration, text=hyp, speaker_id=utt.speaker_id,
            gender=utt.gender, label_source="noisy"))
    stats = {"transcribed": len(utts), "dropped_empty": dropped_empty,
             "unreadable": unreadable}
    return Manifest(utts, provenance="noisy transcription"), stats


def _evaluate(ckpt: Checkpoint, test_manifest: Manifest,
              frontend_cfg: FrontendConfig) -> ScoreReport:
    feats = [extract_features(read_wav(u.resolve_path(test_manifest.base_dir)),
                              frontend_cfg)
             for u in test_manifest]
    hyps = predict_features(ckpt.params, ckpt.model_config, feats, ckpt.charset)
    return score(test_manifest.texts(), hyps)


def _experiment_charset(cfg: ExperimentConfig) -> Charset:
    texts = list(read_manifest(cfg.finetune_manifest).texts())
    for src in cfg.pretrain_sources:
        if src.label_mode in ("gold", "synthetic"):
            texts.extend(read_manifest(src.manifest_path).texts())
    return build_charset(texts)[0]


def _stage_train(cfg: ExperimentConfig, manifest: Manifest, stage: str,
                 seed: int, charset: Charset, params=None):
    model_cfg = ModelConfig.preset(cfg.model_preset, dropout=cfg.dropout)
    train_cfg_base = cfg.pretrain if stage == "pretrain" else cfg.finetune
    train_cfg = TrainConfig(batch_size=train_cfg_base.batch_size,
                            epochs=train_cfg_base.epochs,
                            learning_rate=train_cfg_base.learning_rate,
                            seed=seed)
    policy_name = (cfg.pretrain_specaugment if stage == "pretrain"
                   else cfg.finetune_specaugment)
    policy = _policy_for(policy_name, stage, manifest.total_hours)
    frontend_cfg = FrontendConfig(dither=cfg.dither)
    if params is None:
        params = init_params(model_cfg, len(charset), seed=seed)
    params, history = train_on_manifest(manifest, model_cfg, train_cfg, policy,
                                        charset, params, frontend_cfg)
    ckpt = Checkpoint(model_config=model_cfg, charset=charset, params=params,
                      rng_info={"seed": seed, "stage": stage,
                                "epochs": train_cfg.epochs})
    return ckpt, history


def _cycle_dir(cfg: ExperimentConfig, index: int) -> str:
    path = os.path.join(cfg.exp_dir, "cycle%d" % index)
    os.makedirs(path, exist_ok=True)
    return path


def _write_cycle_report(cfg: ExperimentConfig, state: CycleState) -> None:
    cdir = _cycle_dir(cfg, state.cycle_index)
    with open(os.path.join(cdir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report([state]))
    with open(os.path.join(cdir, "report.records"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(state.to_record(), ensure_ascii=False) + "\n")


def _write_resolved_config(cfg: ExperimentConfig) -> None:
    os.makedirs(cfg.exp_dir, exist_ok=True)
    with open(os.path.join(cfg.exp_dir, "resolved.cfg"), "w",
              encoding="utf-8") as fh:
        fh.write(config_to_ini(cfg))


def _run_baseline_stage(cfg: ExperimentConfig, charset: Charset):
    state = CycleState(cycle_index=0, tag="baseline", checkpoint_path="")
    finetune = read_manifest(
        _audit(cfg, cfg.finetune_manifest, state, "trained_on"))
    if any(u.label_source != "gold" for u in finetune):
        raise ConfigInvalid("baseline fine-tune manifest must be gold-labeled")
    ckpt, history = _stage_train(cfg, finetune, "finetune",
                                 derive_seed(cfg.seed, "finetune", 0), charset)
    rep = _evaluate(ckpt, read_manifest(cfg.test_manifest),
                    FrontendConfig(dither=cfg.dither))
    state.checkpoint_path = os.path.join(_cycle_dir(cfg, 0), "finetune.ckpt")
    save_checkpoint(state.checkpoint_path, ckpt)
    final_loss = history[-1] if history else float("nan")
    state.stage_history.append({"stage": "finetune", "loss": final_loss,
                                "wer": rep.error_rate})
    state.loss = final_loss
    state.wer = rep.error_rate
    _write_cycle_report(cfg, state)
    return state, ckpt, rep


def run_baseline(cfg: ExperimentConfig) -> tuple[Checkpoint, ScoreReport]:
    """Single gold fine-tune stage, scored on the test manifest."""
    cfg.validate()
    _write_resolved_config(cfg)
    charset = _experiment_charset(cfg)
    _, ckpt, rep = _run_baseline_stage(cfg, charset)
    return ckpt, rep


def _pretrain_finetune_cycle(cfg: ExperimentConfig, cycle_index: int,
                             transcriber: Checkpoint, charset: Charset,
                             warm_params: dict | None = None
                             ) -> tuple[CycleState, Checkpoint]:
    """One cycle: regenerate noisy text, pretrain, fine-tune, score."""
    state = CycleState(cycle_index=cycle_index, tag="+".join(
        s.tag for s in cfg.pretrain_sources) or "none", checkpoint_path="")
    cdir = _cycle_dir(cfg, cycle_index)
    frontend_cfg = FrontendConfig(dither=cfg.dither)

    parts = []
    for src in cfg.pretrain_sources:
        source_manifest = read_manifest(src.manifest_path)
        if src.label_mode == "noisy":
            _audit(cfg, src.manifest_path, state, "transcribed")
            noisy, stats = transcribe_corpus(transcriber, source_manifest,
                                             frontend_cfg)
            noisy_path = os.path.join(cdir, "noisy-%s.manifest" % src.tag)
            write_manifest(noisy, noisy_path)
            state.noisy_manifests.append(noisy_path)
            state.stage_history.append({"stage": "transcribe-%s" % src.tag,
                                        **stats})
            parts.append((read_manifest(noisy_path), src.tag))
        else:
            _audit(cfg, src.manifest_path, state, "trained_on")
            parts.append((source_manifest, src.tag))
    pretrain_manifest = mix_manifests(parts)

    ckpt, history = _stage_train(cfg, pretrain_manifest, "pretrain",
                                 derive_seed(cfg.seed, "pretrain", cycle_index),
                                 charset, params=warm_params)
    save_checkpoint(os.path.join(cdir, "pretrain.ckpt"), ckpt)
    state.stage_history.append({"stage": "pretrain",
                                "loss": history[-1] if history else float("nan")})

    finetune = read_manifest(
        _audit(cfg, cfg.finetune_manifest, state, "trained_on"))
    ckpt, history = _stage_train(cfg, finetune, "finetune",
                                 derive_seed(cfg.seed, "finetune", cycle_index),
                                 charset, params=ckpt.params)
    rep = _evaluate(ckpt, read_manifest(cfg.test_manifest), frontend_cfg)
    state.checkpoint_path = os.path.join(cdir, "finetune.ckpt")
    save_checkpoint(state.checkpoint_path, ckpt)
    final_loss = history[-1] if history else float("nan")
    state.stage_history.append({"stage": "finetune", "loss": final_loss,
                                "wer": rep.error_rate})
    state.loss = final_loss
    state.wer = rep.error_rate
    _write_cycle_report(cfg, state)
    return state, ckpt


def run_cycles(cfg: ExperimentConfig) -> list[CycleState]:
    """Bootstrap baseline, then n_cycles of regenerate/pretrain/fine-tune."""
    cfg.validate()
    if cfg.n_cycles >= 1 and not any(s.label_mode == "noisy"
                                     for s in cfg.pretrain_sources):
        raise ConfigInvalid("cycles need at least one noisy pretrain source")
    _write_resolved_config(cfg)
    charset = _experiment_charset(cfg)
    state0, latest, _ = _run_baseline_stage(cfg, charset)
    states = [state0]
    for i in range(1, cfg.n_cycles + 1):
        warm = None
        if cfg.warm_start_pretrain and i > 1:
            from .net.checkpoint import load_checkpoint
            prev = os.path.join(_cycle_dir(cfg, i - 1), "pretrain.ckpt")
            warm = load_checkpoint(prev).params
        state, latest = _pretrain_finetune_cycle(cfg, i, latest, charset, warm)
        states.append(state)
    _write_top_report(cfg, states)
    return states


def run_mixture(cfg: ExperimentConfig) -> CycleState:
    """One pretrain pass over mixed sources, then fine-tune and score.

    Noisy sources are transcribed with the baseline fine-tuned model.
    """
    cfg.validate()
    if not cfg.pretrain_sources:
        raise ConfigInvalid("mixture needs at least one pretrain source")
    _write_resolved_config(cfg)
    charset = _experiment_charset(cfg)
    baseline_state, baseline_ckpt, _ = _run_baseline_stage(cfg, charset)
    state, _ = _pretrain_finetune_cycle(cfg, 1, baseline_ckpt, charset)
    _write_top_report(cfg, [baseline_state, state])
    return state


def report(states) -> str:
    """Render (data, cycle, loss, WER) rows as a fixed-width table."""
    lines = ["%-24s %-6s %-8s %s" % ("data", "cycle", "loss", "WER")]
    for st in states:
        loss = "%.2f" % st.loss if st.loss == st.loss else "-"
        wer = "%.2f%%" % st.wer if st.wer == st.wer else "-"
        lines.append("%-24s %-6d %-8s %s" % (st.tag, st.cycle_index, loss, wer))
    return "\n".join(lines) + "\n"


def _write_top_report(cfg: ExperimentConfig, states) -> None:
    with open(os.path.join(cfg.exp_dir, "report.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(report(states))
    with open(os.path.join(cfg.exp_dir, "report.records"), "w",
              encoding="utf-8") as fh:
        for st in states:
            fh.write(json.dumps(st.to_record(), ensure_ascii=False) + "\n")


def file_checksum(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()
