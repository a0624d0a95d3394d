"""Command-line front end.

Every subcommand prints metrics as `name<TAB>value` lines, echoes its
configuration as JSON next to its outputs, and is deterministic for a fixed
seed, so re-running a command reproduces its outputs byte for byte. Errors
exit with status 1 and a single diagnostic line; usage problems exit 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import formats
from .abx import abx_evaluate, extract_items
from .interpret import build_contingency, majority_label, v_measure
from .lookup_vocoder import KeyKind, lv_resynthesize, memorization_rate
from .merge import (
    METHOD_KK, METHOD_KH, METHOD_KWH,
    merge_kh, merge_kk, merge_kk_weighted, merge_kwh,
)
from .quantize import KMeansConfig, deduplicate, kmeans_fit, kmeans_fit_standardized, quantize
from .redundancy import CRMatrix, measure_redundancy, ued
from .render import load_family_table, render_svg
from .synthetic import SwapPlant, blob_corpus, planted_swap_units
from .tsne import tsne_embed
from .types import SIL_LABEL, ValidationError
from .voronoi import voronoi


def worker_count() -> int:
    """Thread cap from UNIT_INSIGHT_THREADS, defaulting to all cores."""
    env = os.environ.get("UNIT_INSIGHT_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return os.cpu_count() or 1


def _echo_config(args: argparse.Namespace, out_dir: Path) -> None:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
           if k != "func"}
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{cfg['subcommand']}.config.json").write_text(
        json.dumps(cfg, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _metric(name: str, value) -> None:
    if isinstance(value, float):
        print(f"{name}\t{value:.2f}")
    else:
        print(f"{name}\t{value}")


def _load_feats_dir(dirpath: Path) -> list:
    paths = sorted(dirpath.glob("*.feats"))
    if not paths:
        raise ValidationError(f"no .feats files under {dirpath}")
    return [formats.read_feats(p) for p in paths]


def _read_any_units(path: Path):
    """Frame-level or deduped unit file; returns (utterance_id, units) pairs."""
    try:
        return [(z.utterance_id, z.units) for z in formats.read_units(path)]
    except formats.FormatError:
        return [(d.utterance_id, d.units) for d in formats.read_deduped(path)]


# ---------------------------------------------------------------------------
# subcommands


def _cmd_kmeans_train(args) -> int:
    feats = _load_feats_dir(Path(args.feats))
    pooled = np.concatenate([f.data for f in feats])
    cfg = KMeansConfig(k=args.k, max_iters=args.max_iters, tol=args.tol, seed=args.seed)
    fit = kmeans_fit_standardized if args.standardize else kmeans_fit
    cb = fit(pooled, cfg)
    formats.write_codebook(cb, args.out)
    _echo_config(args, Path(args.out).parent)
    _metric("frames", pooled.shape[0])
    _metric("k", cb.k)
    return 0


def _cmd_quantize(args) -> int:
    cb = formats.read_codebook(args.codebook)
    feats = _load_feats_dir(Path(args.feats))
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        seqs = list(pool.map(lambda f: quantize(f, cb), feats))
    formats.write_units(seqs, args.out)
    _echo_config(args, Path(args.out).parent)
    _metric("utterances", len(seqs))
    return 0


def _cmd_dedup(args) -> int:
    seqs = formats.read_units(args.units)
    deduped = [deduplicate(z) for z in seqs]
    formats.write_deduped(deduped, args.out)
    _echo_config(args, Path(args.out).parent)
    _metric("utterances", len(deduped))
    return 0


def _cmd_vmeasure(args) -> int:
    seqs = formats.read_units(args.units)
    counts = {z.utterance_id: len(z) for z in seqs}
    labels = formats.read_alignment(args.alignment, args.kind, frame_counts=counts)
    exclude = {SIL_LABEL} if args.exclude_sil else set()
    table = build_contingency(seqs, labels, exclude=exclude)
    r = v_measure(table)
    _metric("homogeneity", r.homogeneity)
    _metric("completeness", r.completeness)
    _metric("v", r.v)
    return 0


def _cmd_viz(args) -> int:
    cb = formats.read_codebook(args.codebook)
    seqs = formats.read_units(args.units)
    counts = {z.utterance_id: len(z) for z in seqs}
    labels = formats.read_alignment(args.alignment, "phoneme", frame_counts=counts)
    table = build_contingency(seqs, labels, num_units=cb.k)
    unit_labels = majority_label(table)
    emb = tsne_embed(cb, perplexity=args.perplexity, iters=args.iters,
                     seed=args.seed, metric=args.metric)
    diagram = voronoi(emb)
    families = load_family_table(args.families)
    render_svg(diagram, unit_labels, families, args.out)
    _echo_config(args, Path(args.out).parent)
    _metric("final_kl", emb.final_kl)
    return 0


def _cmd_lv_resynth(args) -> int:
    deduped = formats.read_deduped(args.units)
    corpus = []
    for d in deduped:
        wav_path = Path(args.wav_dir) / f"{d.utterance_id}.wav"
        if not wav_path.exists():
            raise ValidationError(f"no waveform for {d.utterance_id!r} at {wav_path}")
        corpus.append((d, formats.read_wav(wav_path, d.utterance_id)))
    k = args.k if args.k else 1 + max(int(d.units.max()) for d in deduped if len(d))
    outputs, report = lv_resynthesize(corpus, KeyKind.parse(args.key), k, args.seed)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for w in outputs:
        formats.write_wav(w, out_dir / f"{w.utterance_id}.wav")
    lines = [
        f"{uid}\t{pct:.4f}"
        for uid, pct in zip(report.utterance_ids, report.unseen_percent)
    ]
    mean = memorization_rate(report, pooled=args.pooled)
    lines.append(f"MEAN\t{mean:.4f}")
    Path(args.report).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _echo_config(args, out_dir)
    _metric("memorization", mean)
    return 0


def _cmd_ued(args) -> int:
    a = _read_any_units(Path(args.a))
    b = dict(_read_any_units(Path(args.b)))
    values = []
    for uid, units in a:
        if uid not in b:
            raise ValidationError(f"utterance {uid!r} missing from {args.b}")
        value = ued(units, b[uid])
        values.append(value)
        _metric(uid, value)
    _metric("mean_ued", float(np.mean(values)))
    return 0


def _cmd_cr(args) -> int:
    pass1 = formats.read_deduped(args.units_pass1)
    pass2 = formats.read_deduped(args.units_pass2)
    result = measure_redundancy(pass1, pass2, args.k, normalize=args.normalize)
    write_cr_tsv(result.cr, args.out)
    _echo_config(args, Path(args.out).parent)
    _metric("mean_ued", result.mean_ued)
    return 0


def _cmd_merge(args) -> int:
    cb = formats.read_codebook(args.codebook)
    if args.method == METHOD_KK:
        fn = merge_kk_weighted if args.weighted else merge_kk
        merged, mapping = fn(cb, args.target, args.seed)
    elif args.method == METHOD_KH:
        merged, mapping = merge_kh(cb, args.target)
    elif args.method == METHOD_KWH:
        if not args.cr:
            raise ValidationError("method kwh needs --cr")
        merged, mapping = merge_kwh(cb, read_cr_tsv(args.cr), args.target)
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown method {args.method!r}")
    formats.write_codebook(merged, args.out)
    lines = [f"{src}\t{dst}" for src, dst in enumerate(mapping.mapping)]
    Path(args.map).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _echo_config(args, Path(args.out).parent)
    _metric("k", merged.k)
    return 0


def _cmd_abx(args) -> int:
    seqs = formats.read_units(args.units)
    cb = formats.read_codebook(args.codebook)
    counts = {z.utterance_id: len(z) for z in seqs}
    phones = formats.read_alignment(args.phones, "phoneme", frame_counts=counts)
    speakers = formats.read_alignment(args.speakers, "speaker", frame_counts=counts)
    items = extract_items(phones, speakers)
    result = abx_evaluate(items, args.mode, seqs, cb,
                          max_triples=args.max_triples, seed=args.seed, dedupe=args.dedupe)
    _metric("abx_error", result.score)
    _metric("triples", result.num_triples)
    return 0


def _cmd_gen_synthetic(args) -> int:
    out = Path(args.out)
    corpus = blob_corpus(
        k=args.k,
        n_pairs=args.pairs,
        n_decoys=args.decoys,
        n_utterances=args.utterances,
        runs_per_utterance=args.runs,
        seed=args.seed,
    )
    (out / "feats").mkdir(parents=True, exist_ok=True)
    (out / "wavs").mkdir(parents=True, exist_ok=True)
    for f in corpus.features:
        formats.write_feats(f, out / "feats" / f"{f.utterance_id}.feats")
    for w in corpus.waveforms:
        formats.write_wav(w, out / "wavs" / f"{w.utterance_id}.wav")
    formats.write_codebook(corpus.codebook, out / "codebook.cbok")
    formats.write_alignment(corpus.phones, out / "phones.tsv")
    formats.write_alignment(corpus.speakers, out / "speakers.tsv")
    formats.write_alignment(corpus.genders, out / "genders.tsv")

    plants = [
        SwapPlant(a, b, args.swap_prob) for a, b in corpus.pair_units
    ]
    pass1, pass2 = planted_swap_units(args.k, plants, args.utterances, args.runs, seed=args.seed)
    formats.write_deduped(pass1, out / "units_pass1.txt")
    formats.write_deduped(pass2, out / "units_pass2.txt")

    meta = {
        "k": args.k,
        "pair_units": corpus.pair_units,
        "decoy_units": corpus.decoy_units,
        "swap_prob": args.swap_prob,
        "seed": args.seed,
    }
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    _echo_config(args, out)
    _metric("utterances", len(corpus.features))
    return 0


# ---------------------------------------------------------------------------
# CR matrix TSV


def write_cr_tsv(cr: CRMatrix, path: str | Path) -> None:
    k_ext = cr.k_ext
    lines = ["unit\t" + "\t".join(str(j) for j in range(k_ext))]
    for i in range(k_ext):
        lines.append(str(i) + "\t" + "\t".join(f"{v:.10g}" for v in cr.swap_rate[i]))
    lines.append("# occurrences\t" + "\t".join(str(int(c)) for c in cr.occurrence_counts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_cr_tsv(path: str | Path) -> CRMatrix:
    rows = {}
    occurrences = None
    header: list[int] | None = None
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# occurrences\t"):
                occurrences = [int(v) for v in line.split("\t")[1:]]
                continue
            if line.startswith("#"):
                continue
            parts = line.split("\t")
            if parts[0] == "unit":
                header = [int(v) for v in parts[1:]]
                continue
            rows[int(parts[0])] = [float(v) for v in parts[1:]]
    if header is None or len(rows) != len(header):
        raise formats.FormatError(f"{path}: malformed swap-rate matrix")
    k_ext = len(header)
    rate = np.zeros((k_ext, k_ext))
    for i in range(k_ext):
        rate[i] = rows[i]
    occ = np.array(occurrences if occurrences is not None else [0] * k_ext, dtype=np.int64)
    return CRMatrix(rate, occ)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unit-insight",
        description="Discrete speech unit analysis: quantize, interpret, visualize, "
                    "resynthesize, measure redundancy, merge clusters, evaluate ABX.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("kmeans-train", help="fit a codebook over pooled features")
    p.add_argument("--feats", required=True, help="directory of .feats files")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_kmeans_train)

    p = sub.add_parser("quantize", help="assign frames to nearest codebook units")
    p.add_argument("--feats", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_quantize)

    p = sub.add_parser("dedup", help="collapse repeated units into runs with durations")
    p.add_argument("--units", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dedup)

    p = sub.add_parser("vmeasure", help="unit/label correlation scores")
    p.add_argument("--units", required=True)
    p.add_argument("--alignment", required=True)
    p.add_argument("--kind", choices=["phoneme", "speaker", "gender"], required=True)
    p.add_argument("--exclude-sil", action="store_true")
    p.set_defaults(func=_cmd_vmeasure)

    p = sub.add_parser("viz", help="render the unit-space area plot")
    p.add_argument("--codebook", required=True)
    p.add_argument("--units", required=True)
    p.add_argument("--alignment", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    p.add_argument("--families", default=None, help="phoneme family TSV override")
    p.set_defaults(func=_cmd_viz)

    p = sub.add_parser("lv-resynth", help="lookup-table resynthesis and memorization")
    p.add_argument("--units", required=True, help="deduped unit file")
    p.add_argument("--wav-dir", required=True)
    p.add_argument("--key", choices=["ls", "lf", "cs", "cf"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=0, help="codebook size; inferred when omitted")
    p.add_argument("--pooled", action="store_true", help="pool keys instead of per-utterance mean")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_lv_resynth)

    p = sub.add_parser("ued", help="unit edit distance between two transcriptions")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=_cmd_ued)

    p = sub.add_parser("cr", help="swap-rate matrix between two unit transcriptions")
    p.add_argument("--units-pass1", required=True)
    p.add_argument("--units-pass2", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--normalize", choices=["occurrences", "edits"], default="occurrences")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cr)

    p = sub.add_parser("merge", help="reduce a codebook to fewer units")
    p.add_argument("--codebook", required=True)
    p.add_argument("--method", choices=[METHOD_KK, METHOD_KH, METHOD_KWH], required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--cr", default=None, help="swap-rate TSV (required for kwh)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weighted", action="store_true", help="occupancy-weighted kk variant")
    p.add_argument("--out", required=True)
    p.add_argument("--map", required=True)
    p.set_defaults(func=_cmd_merge)

    p = sub.add_parser("abx", help="ABX discrimination error")
    p.add_argument("--units", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--phones", required=True)
    p.add_argument("--speakers", required=True)
    p.add_argument("--mode", choices=["within", "across"], required=True)
    p.add_argument("--max-triples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dedupe", action="store_true", help="dedupe item unit spans before warping")
    p.set_defaults(func=_cmd_abx)

    p = sub.add_parser("gen-synthetic", help="write a self-contained synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=24)
    p.add_argument("--pairs", type=int, default=2)
    p.add_argument("--decoys", type=int, default=2)
    p.add_argument("--utterances", type=int, default=100)
    p.add_argument("--runs", type=int, default=40)
    p.add_argument("--swap-prob", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_synthetic)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, formats.FormatError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
