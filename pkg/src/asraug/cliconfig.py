"""INI config files for the CLI.

Sections hold plain key=value pairs; unknown sections or keys are
configuration errors. Command-line flags override file values, and every
config-driven run writes its fully resolved config next to its outputs.
"""

from __future__ import annotations

import configparser
import os

from .errors import ConfigInvalid
from .experiment import ExperimentConfig, PretrainSource
from .net.training import TrainConfig
from .synth import SynthRecipe

SCHEMA = {
    "experiment": {"name", "workdir", "n_cycles", "seed", "dither"},
    "model": {"preset", "dropout"},
    "pretrain": {"sources", "specaugment", "batch_size", "epochs",
                 "learning_rate"},
    "finetune": {"manifest", "specaugment", "batch_size", "epochs",
                 "learning_rate"},
    "test": {"manifest"},
    "train": {"manifest", "specaugment", "batch_size", "epochs",
              "learning_rate", "out"},
    "synth": {"preset", "voices_per_gender", "utterances_per_voice",
              "words_per_utterance", "sentences", "out_dir", "seed"},
    "lm": {"order", "alpha", "beta", "beam_width", "corpus"},
}


def load_config(path) -> dict:
    """Parse and validate an INI file into {section: {key: str}}."""
    if not os.path.exists(path):
        raise ConfigInvalid("config file %r does not exist" % str(path))
    cp = configparser.ConfigParser()
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigInvalid("cannot parse %r: %s" % (str(path), exc)) from exc
    out: dict = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigInvalid("unknown config section [%s]" % section)
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigInvalid("unknown key %r in section [%s]"
                                    % (key, section))
        out[section] = dict(cp[section])
    return out


def merge_overrides(cfg: dict, overrides: dict) -> dict:
    """Apply {(section, key): value} on top of file values; None skipped."""
    merged = {s: dict(kv) for s, kv in cfg.items()}
    for (section, key), value in overrides.items():
        if value is None:
            continue
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigInvalid("unknown override %s.%s" % (section, key))
        merged.setdefault(section, {})[key] = str(value)
    return merged


def _get(cfg: dict, section: str, key: str, default=None, required=False):
    value = cfg.get(section, {}).get(key, default)
    if required and value is None:
        raise ConfigInvalid("missing required config value %s.%s"
                            % (section, key))
    return value


def _as_int(value, what):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigInvalid("%s must be an integer, got %r" % (what, value))


def _as_float(value, what):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigInvalid("%s must be a number, got %r" % (what, value))


def _parse_sources(text: str) -> list[PretrainSource]:
    sources = []
    for item in (text or "").split():
        if ":" not in item:
            raise ConfigInvalid("pretrain source %r must look like mode:path"
                                % item)
        mode, path = item.split(":", 1)
        sources.append(PretrainSource(manifest_path=path, label_mode=mode))
    return sources


def _train_config(cfg: dict, section: str, seed: int) -> TrainConfig:
    return TrainConfig(
        batch_size=_as_int(_get(cfg, section, "batch_size", "32"),
                           section + ".batch_size"),
        epochs=_as_int(_get(cfg, section, "epochs", "50"), section + ".epochs"),
        learning_rate=_as_float(_get(cfg, section, "learning_rate", "0.02"),
                                section + ".learning_rate"),
        seed=seed,
    ).validate()


def build_experiment_config(cfg: dict) -> ExperimentConfig:
    seed = _as_int(_get(cfg, "experiment", "seed", "7"), "experiment.seed")
    return ExperimentConfig(
        name=_get(cfg, "experiment", "name", required=True),
        workdir=_get(cfg, "experiment", "workdir", "exp"),
        finetune_manifest=_get(cfg, "finetune", "manifest", required=True),
        test_manifest=_get(cfg, "test", "manifest", required=True),
        pretrain_sources=_parse_sources(_get(cfg, "pretrain", "sources", "")),
        n_cycles=_as_int(_get(cfg, "experiment", "n_cycles", "3"),
                         "experiment.n_cycles"),
        model_preset=_get(cfg, "model", "preset", "tiny"),
        dropout=_as_float(_get(cfg, "model", "dropout", "0.2"), "model.dropout"),
        pretrain=_train_config(cfg, "pretrain", seed),
        finetune=_train_config(cfg, "finetune", seed),
        pretrain_specaugment=_get(cfg, "pretrain", "specaugment", "auto"),
        finetune_specaugment=_get(cfg, "finetune", "specaugment", "auto"),
        dither=_as_float(_get(cfg, "experiment", "dither", "1e-5"),
                         "experiment.dither"),
        seed=seed,
    ).validate()


def build_synth_recipe(cfg: dict) -> SynthRecipe:
    preset = _get(cfg, "synth", "preset")
    if preset == "full":
        base = SynthRecipe()
    elif preset in (None, "desk"):
        base = SynthRecipe(n_voices_per_gender=4, utterances_per_voice=25,
                           words_per_utterance=5)
    else:
        raise ConfigInvalid("synth preset must be desk or full, got %r" % preset)
    return SynthRecipe(
        n_voices_per_gender=_as_int(_get(cfg, "synth", "voices_per_gender",
                                         str(base.n_voices_per_gender)),
                                    "synth.voices_per_gender"),
        utterances_per_voice=_as_int(_get(cfg, "synth", "utterances_per_voice",
                                          str(base.utterances_per_voice)),
                                     "synth.utterances_per_voice"),
        words_per_utterance=_as_int(_get(cfg, "synth", "words_per_utterance",
                                         str(base.words_per_utterance)),
                                    "synth.words_per_utterance"),
        seed=_as_int(_get(cfg, "synth", "seed", "0"), "synth.seed"),
    )


def dump_config(cfg: dict) -> str:
    cp = configparser.ConfigParser()
    for section in sorted(cfg):
        cp[section] = {k: str(v) for k, v in sorted(cfg[section].items())}
    import io
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def write_resolved(cfg: dict, path) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
