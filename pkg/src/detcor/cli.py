"""Command-line entry point: ``detcor <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from .align import derive_labels
from .core import SentencePair, _open_lines, read_labels_jsonl, read_lines, read_parallel_tsv
from .core import write_labels_jsonl, write_parallel_tsv
from .corrector import CharLM, read_confusion, train_lm
from .detector import DetectorHyper, DetectorModel, Featurizer, train
from .evaluate import (
    EvalReport,
    errant_corpus,
    eval_sentence_level,
    m2_block_from_pair,
    m2_corpus,
    read_m2,
    write_m2,
    write_report,
)
from .pipeline import correct_corpus
from .synth import SynthConfig, SynthResources, corrupt_corpus, read_lexicon, write_manifest


def _floats(text: str, n: int) -> List[float]:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers")
    return vals


def cmd_synthesize(args) -> None:
    clean = list(read_lines(args.inp))
    cfg = SynthConfig(
        seed=args.seed,
        p_delete_sample=args.p_delete,
        p_insert_sample=args.p_insert,
        mode_weights=tuple(_floats(args.mode_weights, 4)),
        p_substitute=args.p_substitute,
        top_n=args.top_n,
    )
    res = SynthResources(
        confusion=read_confusion(args.confusion) if args.confusion else SynthResources().confusion,
        lexicon=read_lexicon(args.lexicon) if args.lexicon else (),
    )
    pairs, manifest = corrupt_corpus(clean, cfg, res)
    os.makedirs(args.out_dir, exist_ok=True)
    write_parallel_tsv(pairs, os.path.join(args.out_dir, "pairs.tsv"))
    write_labels_jsonl(pairs, os.path.join(args.out_dir, "labels.jsonl"))
    write_m2([m2_block_from_pair(p) for p in pairs], os.path.join(args.out_dir, "gold.m2"))
    write_manifest(manifest, os.path.join(args.out_dir, "manifest.json"))
    fr = manifest["fractions"]
    print(
        f"{manifest['sentences']} pairs: deleted {fr['deleted']:.3f}, inserted {fr['inserted']:.3f}, "
        f"modes " + ", ".join(f"{m} {v:.3f}" for m, v in fr["modes"].items())
    )


def cmd_derive_tags(args) -> None:
    conflicts = 0
    out = []
    for pair in read_parallel_tsv(args.pairs):
        labels, c = derive_labels(pair)
        conflicts += c
        out.append(SentencePair(pair.source, pair.target, labels))
    write_labels_jsonl(out, args.out)
    print(f"{len(out)} pairs labeled, {conflicts} label conflicts")


def cmd_make_m2(args) -> None:
    pairs = list(read_parallel_tsv(args.pairs))
    write_m2([m2_block_from_pair(p) for p in pairs], args.out)
    print(f"{len(pairs)} sentence blocks written")


def cmd_train_detector(args) -> None:
    corpus = list(read_labels_jsonl(args.labels))
    if not corpus:
        raise ValueError(f"{args.labels}: no labeled pairs")
    hyper = DetectorHyper(
        dim=args.dim, lr=args.lr, l2=args.l2, epochs=args.epochs,
        batch_size=args.batch_size, seed=args.seed,
    )
    confusable = read_confusion(args.confusion).table if args.confusion else ()
    feat = Featurizer.from_corpus((p.target for p in corpus), dim=args.dim, confusable=confusable)
    model = train(corpus, hyper, feat, log=print)
    model.save(args.out)
    print(f"loss {model.history[0]:.4f} -> {model.history[-1]:.4f}")


def cmd_train_lm(args) -> None:
    lm = train_lm(read_lines(args.inp), k=args.k, top_k=args.top_k)
    lm.save(args.out)
    print(f"vocabulary {lm.V} symbols, {sum(lm.trigrams.values())} trigram tokens")


def cmd_correct(args) -> None:
    det = DetectorModel.load(args.det)
    lm = CharLM.load(args.lm)
    confusion = read_confusion(args.confusion) if args.confusion else None
    bias = _floats(args.tag_bias, 4) if args.tag_bias else None
    summary = correct_corpus(
        det, lm, args.inp, args.out, confusion, args.beam, bias, args.jobs, args.trace
    )
    print(json.dumps(summary, sort_keys=True))


def _hyp_lines(path) -> List[str]:
    return [line.split("\t")[-1] for _, line in _open_lines(path) if line.strip()]


def _src_lines(path) -> List[str]:
    return [line.split("\t")[0] for _, line in _open_lines(path) if line.strip()]


def _is_m2(path) -> bool:
    for _, line in _open_lines(path):
        if line.strip():
            return line.startswith("S ") or line == "S"
    return False


def cmd_evaluate(args) -> None:
    hyps = _hyp_lines(args.hyp)
    if args.mode == "sighan":
        beta = 1.0 if args.beta is None else args.beta
        pairs = list(read_parallel_tsv(args.gold))
        sources = [p.source for p in pairs]
    else:
        beta = 0.5 if args.beta is None else args.beta
        if _is_m2(args.gold):
            blocks = read_m2(args.gold)
            sources = [b.source for b in blocks]
            gold_sets = [b.edit_sets() for b in blocks]
        else:
            pairs = list(read_parallel_tsv(args.gold))
            sources = [p.source for p in pairs]
            gold_sets = [m2_block_from_pair(p)[1] for p in pairs]
    if args.src is not None and _src_lines(args.src) != sources:
        raise ValueError("--src sentences do not match the gold sources")
    if len(hyps) != len(sources):
        raise ValueError(f"{len(hyps)} hypotheses for {len(sources)} gold sentences")

    if args.mode == "sighan":
        tags = None
        if args.trace:
            from .core import Tag
            tags = [
                [Tag[t.upper()] for t in json.loads(line)["tags"]]
                for _, line in _open_lines(args.trace) if line.strip()
            ]
        det, cor = eval_sentence_level(pairs, hyps, tags)
        reports = {"detection": det, "correction": cor}
    elif args.mode == "m2":
        reports = {"correction": m2_corpus(sources, hyps, gold_sets, beta)}
    else:
        reports = {"correction": errant_corpus(sources, hyps, gold_sets, beta, args.type_sensitive)}
    if args.out:
        write_report(reports, args.out)
    print(f"[{args.mode}]")
    for name, rep in reports.items():
        print(rep.table(name))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="detcor", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="corrupt a clean corpus into labeled pairs")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-delete", type=float, default=0.5)
    p.add_argument("--p-insert", type=float, default=0.5)
    p.add_argument("--p-substitute", type=float, default=0.0)
    p.add_argument("--mode-weights", default="0.35,0.30,0.30,0.05")
    p.add_argument("--top-n", type=int, default=1000)
    p.add_argument("--confusion")
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("derive-tags", help="alignment-derived gold labels for a pairs TSV")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_derive_tags)

    p = sub.add_parser("make-m2", help="gold M2 file from a pairs TSV")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_m2)

    p = sub.add_parser("train-detector", help="fit the four-class error detector")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=1 << 18)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--confusion")
    p.set_defaults(func=cmd_train_detector)

    p = sub.add_parser("train-lm", help="fit the character trigram corrector")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=float, default=0.01)
    p.add_argument("--top-k", type=int, default=2000)
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("correct", help="run detect -> rewrite -> fill over a corpus")
    p.add_argument("--det", required=True)
    p.add_argument("--lm", required=True)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--confusion")
    p.add_argument("--beam", type=int, default=1)
    p.add_argument("--tag-bias", help="logit offsets keep,mistaken,missing,redundant")
    p.add_argument("--trace")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("evaluate", help="score hypotheses")
    p.add_argument("--mode", choices=("sighan", "m2", "errant"), required=True)
    p.add_argument("--src")
    p.add_argument("--hyp", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--beta", type=float)
    p.add_argument("--type-sensitive", action="store_true")
    p.add_argument("--trace", help="trace JSONL from 'correct' (sighan detection tags)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"detcor {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
