"""Command-line entry point.

One subcommand per pipeline procedure. Exit codes: 0 success, 1 usage or
configuration error, 2 data error, 3 numeric failure. Errors print one
machine-parseable line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import cliconfig
from .errors import ConfigError, ConfigInvalid, DataError, NumericError
from .manifest import (Manifest, duration_hm, filter_sentences,
                       gender_balanced_sample, mix_manifests, read_manifest,
                       split_train_test, write_manifest)
from .metrics import score
from .text import Charset, build_charset


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; route them through the
    # config-error branch instead so usage failures exit 1
    def error(self, message):
        raise ConfigInvalid(message)


def _add_common(p):
    p.add_argument("--seed", type=int, default=None,
                   help="override the configured seed")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="workers for per-utterance feature extraction")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="asraug",
                     description="Low-resource ASR augmentation laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-toy", parents=[], help="generate a toy-language text corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--vocab-size", type=int, default=12)
    p.add_argument("--sentences", type=int, default=350)
    p.add_argument("--min-words", type=int, default=3)
    p.add_argument("--max-words", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("synth", help="build a synthetic speech corpus from a recipe")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--sentences", default=None, help="sentence pool file")
    _add_common(p)

    p = sub.add_parser("prepare", help="corpus preparation")
    prep = p.add_subparsers(dest="prepare_op", required=True)

    f = prep.add_parser("filter", help="filter sentences")
    f.add_argument("--in", dest="infile", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--max-words", type=int, default=30)
    f.add_argument("--charset", default=None,
                   help="allowed characters (default: derived from input)")
    f.add_argument("--blocklist", default=None, help="file of banned tokens")

    s = prep.add_parser("split", help="hold out a test set")
    s.add_argument("--manifest", required=True)
    s.add_argument("--n-test", type=int, default=250)
    s.add_argument("--train-out", required=True)
    s.add_argument("--test-out", required=True)
    s.add_argument("--seed", type=int, default=0)

    b = prep.add_parser("balance", help="gender-balanced subsample")
    b.add_argument("--manifest", required=True)
    b.add_argument("--target-hours", type=float, required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--seed", type=int, default=0)

    m = prep.add_parser("mix", help="concatenate tagged manifests")
    m.add_argument("--part", action="append", required=True,
                   metavar="TAG:MANIFEST")
    m.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a model on a manifest")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="checkpoint path")
    _add_common(p)

    p = sub.add_parser("transcribe", help="greedy-transcribe a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("eval", help="score hypotheses against references")
    p.add_argument("--refs", required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--unit", choices=("word", "char", "both"), default="both")

    p = sub.add_parser("cycle", help="cyclic unsupervised-transcription experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--n-cycles", type=int, default=None)
    p.add_argument("--workdir", default=None)
    _add_common(p)

    p = sub.add_parser("mixture", help="single pretrain+fine-tune over mixed sources")
    p.add_argument("--config", required=True)
    p.add_argument("--workdir", default=None)
    _add_common(p)

    p = sub.add_parser("lm-demo", help="LM in-favor / against bias demonstration")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True, help="text corpus, one sentence per line")
    p.add_argument("--test", required=True, help="test manifest")
    p.add_argument("--order", type=int, default=6)
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--beam-width", type=int, default=16)

    p = sub.add_parser("report", help="render an experiment records file")
    p.add_argument("--records", required=True)

    return parser


def _read_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def _cmd_gen_toy(args) -> int:
    from .toylang import generate_toy_language
    lines = generate_toy_language(args.seed, args.vocab_size, args.sentences,
                                  (args.min_words, args.max_words))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("wrote %d sentences to %s" % (len(lines), args.out))
    return 0


def _cmd_synth(args) -> int:
    from .synth import build_synthetic_corpus
    cfg = cliconfig.load_config(args.config)
    cfg = cliconfig.merge_overrides(cfg, {
        ("synth", "out_dir"): args.out_dir,
        ("synth", "sentences"): args.sentences,
        ("synth", "seed"): args.seed,
    })
    recipe = cliconfig.build_synth_recipe(cfg)
    out_dir = cfg.get("synth", {}).get("out_dir")
    pool_path = cfg.get("synth", {}).get("sentences")
    if not out_dir or not pool_path:
        raise ConfigInvalid("synth needs synth.out_dir and synth.sentences")
    pool = _read_lines(pool_path)
    manifest = build_synthetic_corpus(recipe, pool, out_dir)
    cliconfig.write_resolved(cfg, os.path.join(out_dir, "resolved.cfg"))
    print("synthesized %d utterances (%s) into %s"
          % (len(manifest), duration_hm(manifest.total_duration), out_dir))
    return 0


def _cmd_prepare(args) -> int:
    if args.prepare_op == "filter":
        lines = _read_lines(args.infile)
        charset = Charset(args.charset) if args.charset \
            else build_charset(lines)[0]
        blocklist = set(_read_lines(args.blocklist)) if args.blocklist else set()
        kept, stats = filter_sentences(lines, charset, args.max_words, blocklist)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(kept) + ("\n" if kept else ""))
        print("accepted %d, rejected %d (long=%d charset=%d blocklist=%d digits=%d)"
              % (stats.accepted, stats.rejected, stats.too_long,
                 stats.bad_charset, stats.blocklisted, stats.has_digit))
    elif args.prepare_op == "split":
        manifest = read_manifest(args.manifest)
        train, test = split_train_test(manifest, args.n_test, args.seed)
        write_manifest(train, args.train_out)
        write_manifest(test, args.test_out)
        print("train %d utts (%s), test %d utts (%s)"
              % (len(train), duration_hm(train.total_duration),
                 len(test), duration_hm(test.total_duration)))
    elif args.prepare_op == "balance":
        manifest = read_manifest(args.manifest)
        out = gender_balanced_sample(manifest, args.target_hours, args.seed)
        write_manifest(out, args.out)
        male = sum(u.duration for u in out if u.gender == "male")
        female = sum(u.duration for u in out if u.gender == "female")
        print("sampled %d utts, male %s, female %s"
              % (len(out), duration_hm(male), duration_hm(female)))
    else:  # mix
        parts = []
        for item in args.part:
            if ":" not in item:
                raise ConfigInvalid("--part must look like TAG:MANIFEST, got %r"
                                    % item)
            tag, path = item.split(":", 1)
            parts.append((read_manifest(path), tag))
        mixed = mix_manifests(parts)
        write_manifest(mixed, args.out)
        print("mixed %d utts (%s) into %s"
              % (len(mixed), duration_hm(mixed.total_duration), args.out))
    return 0


def _cmd_train(args) -> int:
    from .augment import choose_policy, policy_by_name
    from .frontend import FrontendConfig
    from .net.checkpoint import Checkpoint, save_checkpoint
    from .net.network import ModelConfig
    from .net.training import train_on_manifest

    cfg = cliconfig.load_config(args.config)
    cfg = cliconfig.merge_overrides(cfg, {
        ("experiment", "seed"): args.seed,
        ("train", "out"): args.out,
    })
    section = cfg.get("train", {})
    manifest_path = section.get("manifest")
    out_path = section.get("out")
    if not manifest_path or not out_path:
        raise ConfigInvalid("train needs train.manifest and train.out")
    seed = int(cfg.get("experiment", {}).get("seed", "7"))
    manifest = read_manifest(manifest_path)
    charset = build_charset(manifest.texts())[0]
    model_cfg = ModelConfig.preset(
        cfg.get("model", {}).get("preset", "tiny"),
        dropout=float(cfg.get("model", {}).get("dropout", "0.2")))
    train_cfg = cliconfig._train_config(cfg, "train", seed)
    policy_name = section.get("specaugment", "auto")
    policy = (choose_policy("finetune", manifest.total_hours)
              if policy_name == "auto" else policy_by_name(policy_name))
    dither = float(cfg.get("experiment", {}).get("dither", "1e-5"))
    params, history = train_on_manifest(manifest, model_cfg, train_cfg, policy,
                                        charset,
                                        frontend_cfg=FrontendConfig(dither=dither))
    ckpt = Checkpoint(model_config=model_cfg, charset=charset, params=params,
                      rng_info={"seed": seed, "epochs": train_cfg.epochs})
    save_checkpoint(out_path, ckpt)
    cliconfig.write_resolved(cfg, out_path + ".resolved.cfg")
    print("trained %d epochs, final loss %.2f, checkpoint %s"
          % (len(history), history[-1] if history else float("nan"), out_path))
    return 0


def _cmd_transcribe(args) -> int:
    from .experiment import transcribe_corpus
    from .net.checkpoint import load_checkpoint

    ckpt = load_checkpoint(args.checkpoint)
    manifest = read_manifest(args.manifest)
    noisy, stats = transcribe_corpus(ckpt, manifest, n_threads=args.threads)
    write_manifest(noisy, args.out)
    print("transcribed %d utts (dropped %d empty, %d unreadable) into %s"
          % (stats["transcribed"], stats["dropped_empty"], stats["unreadable"],
             args.out))
    return 0


def _pair_texts(refs: Manifest, hyps: Manifest):
    # pair by audio path where possible (dropped utterances score as
    # empty hypotheses); otherwise fall back to positional pairing
    by_path = {os.path.basename(u.audio_filepath): u.text for u in hyps}
    if any(os.path.basename(u.audio_filepath) in by_path for u in refs):
        return refs.texts(), [by_path.get(os.path.basename(u.audio_filepath), "")
                              for u in refs]
    return refs.texts(), hyps.texts()


def _cmd_eval(args) -> int:
    refs = read_manifest(args.refs)
    hyps = read_manifest(args.hyps)
    ref_texts, hyp_texts = _pair_texts(refs, hyps)
    units = ("word", "char") if args.unit == "both" else (args.unit,)
    for unit in units:
        rep = score(ref_texts, hyp_texts, unit)
        print(rep.to_table())
    return 0


def _experiment_config(args):
    cfg = cliconfig.load_config(args.config)
    overrides = {("experiment", "seed"): args.seed,
                 ("experiment", "workdir"): getattr(args, "workdir", None)}
    if getattr(args, "n_cycles", None) is not None:
        overrides[("experiment", "n_cycles")] = args.n_cycles
    return cliconfig.build_experiment_config(
        cliconfig.merge_overrides(cfg, overrides))


def _cmd_cycle(args) -> int:
    from .experiment import report, run_cycles
    states = run_cycles(_experiment_config(args))
    print(report(states), end="")
    return 0


def _cmd_mixture(args) -> int:
    from .experiment import report, run_mixture
    state = run_mixture(_experiment_config(args))
    print(report([state]), end="")
    return 0


def _cmd_lm_demo(args) -> int:
    from .lm import bias_demo
    from .net.checkpoint import load_checkpoint

    ckpt = load_checkpoint(args.checkpoint)
    reports = bias_demo(ckpt, _read_lines(args.corpus),
                        read_manifest(args.test), order=args.order,
                        beam_width=args.beam_width, alpha=args.alpha,
                        beta=args.beta)
    for name, label in (("no_lm", "No LM"), ("lm_against", "LM Against"),
                        ("lm_in_favor", "LM in Favor")):
        print("%-12s %.2f%%" % (label, reports[name].error_rate))
    return 0


def _cmd_report(args) -> int:
    from .experiment import CycleState, report
    states = []
    for line in _read_lines(args.records):
        rec = json.loads(line)
        states.append(CycleState(cycle_index=rec["cycle"], tag=rec["data"],
                                 checkpoint_path=rec.get("checkpoint", ""),
                                 loss=rec.get("loss", float("nan")),
                                 wer=rec.get("wer", float("nan"))))
    print(report(states), end="")
    return 0


_DISPATCH = {
    "gen-toy": _cmd_gen_toy,
    "synth": _cmd_synth,
    "prepare": _cmd_prepare,
    "train": _cmd_train,
    "transcribe": _cmd_transcribe,
    "eval": _cmd_eval,
    "cycle": _cmd_cycle,
    "mixture": _cmd_mixture,
    "lm-demo": _cmd_lm_demo,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        print('error kind=config msg="%s"' % exc, file=sys.stderr)
        return 1
    except DataError as exc:
        print('error kind=data msg="%s"' % exc, file=sys.stderr)
        return 2
    except NumericError as exc:
        print('error kind=numeric msg="%s"' % exc, file=sys.stderr)
        return 3
    except OSError as exc:
        print('error kind=data msg="%s"' % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
