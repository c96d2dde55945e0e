"""Command-line interface.

One executable, one subcommand per pipeline stage: simulate, lm-train,
rescore, nbest, oracle, segment. Options resolve in three layers: built-in
defaults, an optional TOML config file (top-level keys apply everywhere, a
[command] table overrides them), and explicit flags, which always win. The
CONFNET_CONFIG environment variable supplies the config path when --config
is absent.

Every run writes a manifest next to its primary output recording the tool
version, the fully resolved configuration, input digests, output digests,
and a replay argv; re-running that argv reproduces the outputs byte for
byte. Output files are staged and renamed into place only after the whole
command has succeeded, so failures never leave partial files behind.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__, cn as cn_mod, lm as lm_mod, metrics, rescoring, segmentation, simulator
from .errors import ConfnetError, StructureError


# ---------------------------------------------------------------------------
# option tables: single source of truth for parsing, config-file resolution,
# and manifest replay argv reconstruction

@dataclass(frozen=True)
class _Opt:
    dest: str
    typ: Optional[Callable] = str
    default: object = None
    help: str = ""
    is_flag: bool = False
    required: bool = False
    choices: Optional[tuple] = None

    @property
    def flag(self) -> str:
        return "--" + self.dest.replace("_", "-")


_RESCORING_OPTS = [
    _Opt("alpha", float, 0.3, "ASR weight in the combined score"),
    _Opt("beam_width", int, 8, "beam size for streaming rescoring"),
    _Opt("nbest_size", int, 100, "list size for the nbest method"),
    _Opt("prune_threshold", float, 0.005, "drop bin hypotheses below this mass"),
    _Opt("traversal", str, "L2R", "bin visit order for gibbs", choices=("L2R", "H2L")),
    _Opt("passes", int, 1, "gibbs passes over the bins"),
    _Opt("mode", str, "greedy", "gibbs update rule", choices=("greedy", "stochastic")),
    _Opt("temperature", float, 1.0, "stochastic gibbs temperature"),
    _Opt("seed", int, None, "rng seed (required for stochastic mode)"),
    _Opt("max_paths", int, 1_000_000, "refusal limit for exhaustive search"),
]

_COMMANDS: dict[str, list[_Opt]] = {
    "simulate": [
        _Opt("refs", str, None, "reference text, one utterance per line", required=True),
        _Opt("out_dir", str, None, "output directory", required=True),
        _Opt("seed", int, None, "corpus rng seed", required=True),
        _Opt("mean_words_per_bin", float, 2.2, "average words per bin"),
        _Opt("confusables_per_bin", int, 4, "alternatives added to each bin"),
        _Opt("true_top1_probability", float, 0.8, "chance the truth ranks first"),
        _Opt("score_concentration", float, 0.4, "Dirichlet concentration of bin posteriors"),
        _Opt("edit_substitution", float, 0.7, "per-token substitution probability"),
        _Opt("edit_split", float, 0.1, "per-token split probability"),
        _Opt("edit_merge", float, 0.1, "per-token merge probability"),
        _Opt("edit_drop", float, 0.1, "per-token drop probability"),
    ],
    "lm-train": [
        _Opt("corpus", str, None, "training text, one utterance per line", required=True),
        _Opt("out", str, None, "model file to write", required=True),
        _Opt("order", int, 3, "n-gram order"),
        _Opt("smoothing", float, 0.9, "interpolation weight on the MLE"),
        _Opt("heldout", str, None, "text for a perplexity report"),
        _Opt("uniform", None, False, "build a uniform model over the corpus vocabulary",
             is_flag=True),
    ],
    "rescore": [
        _Opt("cn", str, None, "confusion network file", required=True),
        _Opt("lm", str, None, "language model file", required=True),
        _Opt("method", str, None, "rescoring method", required=True,
             choices=rescoring.METHODS),
        _Opt("output", str, None, "hypotheses file to write", required=True),
        _Opt("ref", str, None, "references for a WER report"),
        _Opt("report", str, None, "write the metrics report here too"),
        _Opt("jobs", int, 1, "worker processes"),
        *_RESCORING_OPTS,
    ],
    "nbest": [
        _Opt("cn", str, None, "confusion network file", required=True),
        _Opt("n", int, None, "list size", required=True),
        _Opt("output", str, None, "n-best file to write", required=True),
    ],
    "oracle": [
        _Opt("cn", str, None, "confusion network file", required=True),
        _Opt("ref", str, None, "reference transcripts", required=True),
        _Opt("mode", str, "cn", "cn, or nbest:N"),
        _Opt("report", str, None, "report file to write", required=True),
        _Opt("prune_threshold", float, 0.0, "prune bins before the oracle"),
        _Opt("verbose", None, False, "include per-utterance detail", is_flag=True),
        _Opt("jobs", int, 1, "worker processes"),
    ],
    "segment": [
        _Opt("source", str, None, "input kind", required=True,
             choices=("bio", "word-ends", "teacher")),
        _Opt("bio", str, None, "BIO label file (source bio)"),
        _Opt("word_ends", str, None, "word-end confidence file (source word-ends)"),
        _Opt("alignments", str, None, "word alignment file"),
        _Opt("libri_alignments", str, None, "comma-separated alignment file"),
        _Opt("output", str, None, "segments file to write", required=True),
        _Opt("report", str, None, "write the stats report here too"),
        _Opt("utterance_id", str, None, "id for single-utterance inputs"),
        _Opt("frame_duration_ms", float, 30.0, "frame duration for time conversion"),
        _Opt("boundary_confidence_threshold", float, 0.5, "heuristic close threshold"),
        _Opt("max_segment_words", int, 3, "heuristic word cap"),
        _Opt("max_segment_frames", int, 40, "heuristic frame cap"),
        _Opt("lookahead_frames", int, 2, "segmenter lookahead"),
        _Opt("pre_roll", int, 2, "frames prepended by --rolled"),
        _Opt("post_roll", int, 2, "frames appended by --rolled"),
        _Opt("rolled", None, False, "emit roll-widened spans", is_flag=True),
        _Opt("seed", int, None, "rng seed (required for source teacher)"),
        _Opt("bucket_edges", str, "16,30", "length histogram edges"),
    ],
}

_FLAG_OVERRIDES = {"source": "--from"}


def _flag_for(opt: _Opt) -> str:
    return _FLAG_OVERRIDES.get(opt.dest, opt.flag)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="confnet",
        description="confusion-network rescoring toolkit; see FORMATS.md for file formats",
    )
    parser.add_argument("--version", action="version", version=f"confnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="TOML config file")
        for opt in opts:
            if opt.is_flag:
                p.add_argument(_flag_for(opt), dest=opt.dest, action="store_const",
                               const=True, default=None, help=opt.help)
            else:
                p.add_argument(_flag_for(opt), dest=opt.dest, type=opt.typ,
                               default=None, choices=opt.choices, help=opt.help)
    return parser


def _load_config_file(path: str, command: str) -> dict:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    merged = {k: v for k, v in data.items() if not isinstance(v, dict)}
    merged.update(data.get(command, {}))
    return merged


def resolve_options(args: argparse.Namespace) -> dict:
    command = args.command
    cfg_path = args.config or os.environ.get("CONFNET_CONFIG")
    file_vals = _load_config_file(cfg_path, command) if cfg_path else {}
    resolved: dict = {}
    for opt in _COMMANDS[command]:
        value = getattr(args, opt.dest)
        if value is None and opt.dest in file_vals:
            raw = file_vals[opt.dest]
            value = bool(raw) if opt.is_flag else opt.typ(raw)
            if opt.choices and value not in opt.choices:
                raise StructureError(
                    f"{opt.dest} must be one of {opt.choices}, got {value!r}"
                )
        if value is None:
            value = opt.default
        if opt.required and value is None:
            raise StructureError(f"missing required option {_flag_for(opt)}")
        resolved[opt.dest] = value
    return resolved


def replay_argv(command: str, resolved: dict) -> list[str]:
    """The argv that reproduces this run without any config file."""
    argv = [command]
    for opt in _COMMANDS[command]:
        value = resolved.get(opt.dest)
        if opt.is_flag:
            if value:
                argv.append(_flag_for(opt))
        elif value is not None:
            text = repr(value) if isinstance(value, float) else str(value)
            argv.extend([_flag_for(opt), text])
    return argv


# ---------------------------------------------------------------------------
# staged output files and manifests

class _StagedOutputs:
    def __init__(self):
        self._staged: list[tuple[str, str]] = []

    def stage(self, final_path: str, text: str) -> None:
        directory = os.path.dirname(os.path.abspath(final_path)) or "."
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".confnet-tmp-")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        self._staged.append((tmp, final_path))

    def digests(self) -> dict[str, str]:
        return {final: _sha256_file(tmp) for tmp, final in self._staged}

    def commit(self) -> None:
        for tmp, final in self._staged:
            os.replace(tmp, final)
        self._staged = []

    def abort(self) -> None:
        for tmp, _ in self._staged:
            try:
                os.remove(tmp)
            except OSError:
                pass
        self._staged = []


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest_text(command: str, resolved: dict, inputs: Sequence[str],
                   outputs: dict[str, str]) -> str:
    manifest = {
        "tool": "confnet",
        "version": __version__,
        "command": command,
        "config": {k: resolved[k] for k in sorted(resolved)},
        "inputs": {p: _sha256_file(p) for p in sorted(set(inputs))},
        "outputs": {k: outputs[k] for k in sorted(outputs)},
        "argv": replay_argv(command, resolved),
    }
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def _finish(command: str, resolved: dict, inputs: Sequence[str],
            staged: _StagedOutputs, manifest_path: str) -> None:
    staged.stage(manifest_path, _manifest_text(command, resolved, inputs,
                                               staged.digests()))
    staged.commit()


def _map_ordered(fn, items, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(resolved: dict) -> int:
    model = simulator.CorruptionModel(
        mean_words_per_bin=resolved["mean_words_per_bin"],
        confusables_per_bin=resolved["confusables_per_bin"],
        true_top1_probability=resolved["true_top1_probability"],
        score_concentration=resolved["score_concentration"],
        edit_noise=simulator.EditNoise(
            substitution=resolved["edit_substitution"],
            split=resolved["edit_split"],
            merge=resolved["edit_merge"],
            drop=resolved["edit_drop"],
        ),
        rng_seed=resolved["seed"],
    )
    entries = metrics.read_transcripts(resolved["refs"])
    if not entries:
        raise StructureError(f"no references in {resolved['refs']}")
    ids = [utt_id if utt_id is not None else f"utt-{i:06d}"
           for i, (utt_id, _) in enumerate(entries)]
    refs = [tokens for _, tokens in entries]
    corpus = simulator.synthesize_corpus(refs, model, ids)

    out_dir = resolved["out_dir"]
    staged = _StagedOutputs()
    cn_path = os.path.join(out_dir, "cn.jsonl")
    truth_path = os.path.join(out_dir, "truth.tsv")
    staged.stage(cn_path, "".join(cn_mod.dumps_cn(c) + "\n" for c, _ in corpus))
    staged.stage(truth_path,
                 "".join(f"{i}\t{' '.join(r)}\n" for i, r in zip(ids, refs)))
    _finish("simulate", resolved, [resolved["refs"]], staged,
            os.path.join(out_dir, "manifest.json"))
    print(f"wrote {len(corpus)} networks to {cn_path}")
    return 0


def cmd_lm_train(resolved: dict) -> int:
    corpus = lm_mod.read_corpus(resolved["corpus"])
    if not corpus:
        raise StructureError(f"no training text in {resolved['corpus']}")
    if resolved["uniform"]:
        vocab = lm_mod.Vocabulary(tuple(t for sent in corpus for t in sent))
        model = lm_mod.uniform_lm(vocab)
    else:
        model = lm_mod.train_ngram(corpus, resolved["order"], resolved["smoothing"])

    import io

    buf = io.StringIO()
    _write_lm_to(model, buf)
    staged = _StagedOutputs()
    staged.stage(resolved["out"], buf.getvalue())
    inputs = [resolved["corpus"]]
    summary = {
        "vocabulary_size": len(model.vocab.tokens),
        "order": model.order,
    }
    if resolved["heldout"]:
        heldout = lm_mod.read_corpus(resolved["heldout"])
        summary["heldout_perplexity"] = lm_mod.perplexity(model, heldout)
        inputs.append(resolved["heldout"])
    _finish("lm-train", resolved, inputs, staged, resolved["out"] + ".manifest.json")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _write_lm_to(model, fh) -> None:
    # mirror of lm.save_lm against a text buffer so output can be staged
    fh.write("ngramlm\t1\n")
    fh.write(f"order\t{model.order}\n")
    fh.write(f"smoothing\t{model.smoothing!r}\n")
    fh.write("vocab\t" + " ".join(model.vocab.tokens) + "\n")
    for ctx in sorted(model.backoff):
        fh.write(f"backoff\t{' '.join(ctx)}\t{model.backoff[ctx]!r}\n")
    for ctx in sorted(model.logp):
        joined = " ".join(ctx)
        for tok in sorted(model.logp[ctx]):
            fh.write(f"ngram\t{joined}\t{tok}\t{model.logp[ctx][tok]!r}\n")


def _rescoring_config(resolved: dict) -> rescoring.RescoringConfig:
    if resolved["mode"] == "stochastic" and resolved["seed"] is None:
        raise StructureError("--seed is required for stochastic mode")
    return rescoring.RescoringConfig(
        alpha=resolved["alpha"],
        beam_width=resolved["beam_width"],
        nbest_size=resolved["nbest_size"],
        prune_threshold=resolved["prune_threshold"],
        traversal=resolved["traversal"],
        passes=resolved["passes"],
        mode=resolved["mode"],
        temperature=resolved["temperature"],
        rng_seed=resolved["seed"] if resolved["seed"] is not None else 0,
        max_paths=resolved["max_paths"],
    )


_WORK_LM = None


def _rescore_task(item):
    network, config, method = item
    return rescoring.rescore_one(network, _WORK_LM, config, method)


def cmd_rescore(resolved: dict) -> int:
    global _WORK_LM
    config = _rescoring_config(resolved)
    method = resolved["method"]
    networks = cn_mod.read_cn_file(resolved["cn"])
    model = lm_mod.load_lm(resolved["lm"])
    refs = None
    if resolved["ref"]:
        refs = _refs_for(networks, resolved["ref"])

    _WORK_LM = model
    try:
        results = _map_ordered(
            _rescore_task,
            [(network, config, method) for network in networks],
            resolved["jobs"],
        )
    finally:
        _WORK_LM = None

    lines = []
    stats = []
    for network, (res, tokens) in zip(networks, results):
        sp = res.best
        lines.append(
            f"{network.utterance_id}\t{' '.join(tokens)}\t{sp.combined!r}\t"
            f"{sp.asr_logp!r}\t{sp.lm_logp!r}\t{res.hypotheses_scored}\n"
        )
        if refs is not None:
            stats.append(metrics.edit_distance(tokens, refs[network.utterance_id]))

    report = {
        "method": method,
        "utterances": len(networks),
        "mean_hypotheses_scored": (
            sum(r.hypotheses_scored for r, _ in results) / len(results)
            if results else 0.0
        ),
    }
    if refs is not None:
        report["wer"] = metrics.wer(stats)

    staged = _StagedOutputs()
    staged.stage(resolved["output"], "".join(lines))
    report_text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if resolved["report"]:
        staged.stage(resolved["report"], report_text)
    inputs = [resolved["cn"], resolved["lm"]]
    if resolved["ref"]:
        inputs.append(resolved["ref"])
    _finish("rescore", resolved, inputs, staged,
            resolved["output"] + ".manifest.json")
    print(report_text, end="")
    return 0


def _refs_for(networks, ref_path: str) -> dict[str, tuple[str, ...]]:
    entries = metrics.read_transcripts(ref_path)
    if entries and all(utt_id is not None for utt_id, _ in entries):
        refs = dict(entries)
    else:
        if len(entries) != len(networks):
            raise StructureError(
                f"{ref_path} has {len(entries)} bare lines for "
                f"{len(networks)} networks; add utterance ids"
            )
        refs = {network.utterance_id: tokens
                for network, (_, tokens) in zip(networks, entries)}
    missing = [n.utterance_id for n in networks if n.utterance_id not in refs]
    if missing:
        raise StructureError("no reference for: " + ", ".join(sorted(missing)))
    return refs


def cmd_nbest(resolved: dict) -> int:
    if resolved["n"] < 1:
        raise StructureError("--n must be at least 1")
    networks = cn_mod.read_cn_file(resolved["cn"])
    lines = []
    for network in networks:
        prepared = rescoring.prepare_cn(network, 0.0)
        for rank, path in enumerate(rescoring.extract_nbest(prepared, resolved["n"])):
            tokens = cn_mod.flatten(prepared, path)
            lines.append(
                f"{network.utterance_id}\t{rank}\t{' '.join(tokens)}\t{path.asr_logp!r}\n"
            )
    staged = _StagedOutputs()
    staged.stage(resolved["output"], "".join(lines))
    _finish("nbest", resolved, [resolved["cn"]], staged,
            resolved["output"] + ".manifest.json")
    print(f"wrote n-best lists for {len(networks)} utterances")
    return 0


def _oracle_task(item):
    network, ref, mode, threshold = item
    prepared = rescoring.prepare_cn(network, threshold)
    if mode == "cn":
        rate, path = metrics.oracle_wer_cn(prepared, ref)
        tokens = cn_mod.flatten(prepared, path)
    else:
        n = int(mode.split(":", 1)[1])
        paths = rescoring.extract_nbest(prepared, n)
        seqs = [cn_mod.flatten(prepared, p) for p in paths]
        rate, idx = metrics.oracle_wer_nbest(seqs, ref)
        tokens = seqs[idx]
    return metrics.edit_distance(tokens, ref), tokens


def cmd_oracle(resolved: dict) -> int:
    mode = resolved["mode"]
    if mode != "cn" and not re.fullmatch(r"nbest:[1-9][0-9]*", mode):
        raise StructureError(f"--mode must be cn or nbest:N, got {mode!r}")
    networks = cn_mod.read_cn_file(resolved["cn"])
    if not networks:
        raise StructureError(f"no networks in {resolved['cn']}")
    refs = _refs_for(networks, resolved["ref"])
    items = [
        (network, refs[network.utterance_id], mode, resolved["prune_threshold"])
        for network in networks
    ]
    results = _map_ordered(_oracle_task, items, resolved["jobs"])
    pooled = metrics.wer([st for st, _ in results])
    report = {
        "mode": mode,
        "oracle_wer": pooled,
        "prune_threshold": resolved["prune_threshold"],
        "utterances": len(networks),
    }
    if resolved["verbose"]:
        report["details"] = [
            {
                "utterance_id": network.utterance_id,
                "oracle_wer": st.errors / st.reference_length,
                "best": " ".join(tokens),
            }
            for network, (st, tokens) in zip(networks, results)
        ]
    staged = _StagedOutputs()
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    staged.stage(resolved["report"], text)
    _finish("oracle", resolved, [resolved["cn"], resolved["ref"]], staged,
            resolved["report"] + ".manifest.json")
    print(text, end="")
    return 0


def cmd_segment(resolved: dict) -> int:
    config = segmentation.SegmenterConfig(
        lookahead_frames=resolved["lookahead_frames"],
        pre_roll=resolved["pre_roll"],
        post_roll=resolved["post_roll"],
        boundary_confidence_threshold=resolved["boundary_confidence_threshold"],
        max_segment_words=resolved["max_segment_words"],
        max_segment_frames=resolved["max_segment_frames"],
    )
    source = resolved["source"]
    words_by_utt: dict[str, list[segmentation.WordAlignment]] = {}
    if resolved["alignments"]:
        utt_id = resolved["utterance_id"] or _stem(resolved["alignments"])
        words_by_utt[utt_id] = segmentation.read_alignment_file(resolved["alignments"])
    if resolved["libri_alignments"]:
        words_by_utt.update(
            segmentation.parse_librispeech_alignments(
                resolved["libri_alignments"], resolved["frame_duration_ms"]
            )
        )

    segments_by_utt: dict[str, list[segmentation.Segment]] = {}
    inputs: list[str] = []
    if source == "bio":
        if not resolved["bio"]:
            raise StructureError("--from bio requires --bio")
        inputs.append(resolved["bio"])
        utt_id = resolved["utterance_id"] or _stem(resolved["bio"])
        labels = segmentation.read_bio_file(resolved["bio"])
        segments_by_utt[utt_id] = segmentation.decode_bio(labels)
        num_frames = {utt_id: len(labels)}
    elif source == "word-ends":
        if not resolved["word_ends"]:
            raise StructureError("--from word-ends requires --word-ends")
        inputs.append(resolved["word_ends"])
        utt_id = resolved["utterance_id"] or _stem(resolved["word_ends"])
        ends = segmentation.read_word_ends_file(resolved["word_ends"])
        segments_by_utt[utt_id] = segmentation.word_boundaries_to_segments(ends, config)
        num_frames = {utt_id: ends[-1][0] if ends else 0}
    else:  # teacher
        if not words_by_utt:
            raise StructureError(
                "--from teacher requires --alignments or --libri-alignments"
            )
        if resolved["seed"] is None:
            raise StructureError("--seed is required for teacher segmentation")
        for i, (utt_id, words) in enumerate(sorted(words_by_utt.items())):
            segments_by_utt[utt_id] = segmentation.teacher_segments(
                words, config, simulator.derive_seed(resolved["seed"], i)
            )
        num_frames = {
            utt_id: max((w.end for w in words), default=0)
            for utt_id, words in words_by_utt.items()
        }
    if resolved["alignments"]:
        inputs.append(resolved["alignments"])
    if resolved["libri_alignments"]:
        inputs.append(resolved["libri_alignments"])

    if resolved["rolled"]:
        segments_by_utt = {
            utt_id: [
                segmentation.apply_rolls(s, config, num_frames.get(utt_id, s.end))
                for s in segs
            ]
            for utt_id, segs in segments_by_utt.items()
        }

    edges = tuple(int(e) for e in resolved["bucket_edges"].split(","))
    all_segments = [s for segs in segments_by_utt.values() for s in segs]
    hist = segmentation.segment_length_histogram(all_segments, None, edges)
    report = {
        "utterances": len(segments_by_utt),
        "segments": len(all_segments),
        "length_histogram": {
            label: count for label, count in zip(hist.bucket_labels(), hist.counts)
        },
    }
    if words_by_utt:
        start_counts: dict[int, int] = {}
        end_counts: dict[int, int] = {}
        for utt_id, segs in segments_by_utt.items():
            words = words_by_utt.get(utt_id)
            if not words or not segs:
                continue
            stats = segmentation.boundary_offset_stats(segs, words)
            for k, v in stats.start_offsets.items():
                start_counts[k] = start_counts.get(k, 0) + v
            for k, v in stats.end_offsets.items():
                end_counts[k] = end_counts.get(k, 0) + v
        report["boundary_offsets"] = {
            "starts": {str(k): v for k, v in sorted(start_counts.items())},
            "ends": {str(k): v for k, v in sorted(end_counts.items())},
        }

    staged = _StagedOutputs()
    lines = []
    for utt_id in sorted(segments_by_utt):
        for seg in segments_by_utt[utt_id]:
            lines.append(f"{utt_id}\t{seg.start}\t{seg.end}\n")
    staged.stage(resolved["output"], "".join(lines))
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if resolved["report"]:
        staged.stage(resolved["report"], text)
    _finish("segment", resolved, inputs, staged,
            resolved["output"] + ".manifest.json")
    print(text, end="")
    return 0


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


_HANDLERS = {
    "simulate": cmd_simulate,
    "lm-train": cmd_lm_train,
    "rescore": cmd_rescore,
    "nbest": cmd_nbest,
    "oracle": cmd_oracle,
    "segment": cmd_segment,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolved = resolve_options(args)
        return _HANDLERS[args.command](resolved)
    except (ConfnetError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"confnet: error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
