"""Command line frontend.

Every report embeds the resolved run configuration and tool version.
Exit codes: 0 success, 2 usage/config error, 3 data or format error,
4 infeasible alignment.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .align import ALPHA_GRID, BdrConfig, alignment_to_dict, path_to_spans, to_lrc, viterbi, viterbi_bdr
from .errors import ConfigError, LyricsyncError, SchemaError
from .gram import FrameClock, JointTensor, PitchLayout, Posteriorgram, pool_phoneme, pool_pitch, read_gram, write_gram
from .lexicon import PhonemePlan, PronouncingDictionary, build_plan, parse_lyrics, window_samples
from .loss import LAMBDA_GRID, BoundaryCurve, ctc_loss, pitch_ce, total_loss
from .metrics import AlignEval, corpus_alignment, corpus_mean, eval_alignment, eval_auc, eval_boundary, eval_notes
from .notes import load_notes, notes_to_json
from .synth import SynthSpec, default_plan_song, synth_case


@dataclass(frozen=True)
class RunConfig:
    lam: float = 0.5
    alpha: float = 0.8
    bdr_mode: str = "entry"
    pco_tol: float = 0.3
    bdr_window: float = 0.5
    gaussian_width: float = 0.7
    onset_tol: float = 0.05
    offset_ratio: float = 0.2
    offset_min: float = 0.05
    pitch_tol_cents: float = 50.0
    octave_wrap: bool = True
    pitch_classes: int = 47
    sample_rate: float = 22050.0
    hop: float = 256.0
    decimation: float = 1.0
    insert_spaces: bool = True

    def __post_init__(self):
        for name in ("pco_tol", "bdr_window", "gaussian_width", "onset_tol", "offset_ratio", "offset_min", "pitch_tol_cents"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.lam < 0 or self.alpha < 0:
            raise ConfigError("lambda and alpha must be non-negative")
        if self.bdr_mode not in ("entry", "occupancy"):
            raise ConfigError(f"unknown bdr_mode {self.bdr_mode!r}")
        if self.pitch_classes not in (47, 48):
            raise ConfigError("pitch_classes must be 47 or 48")

    @property
    def clock(self) -> FrameClock:
        return FrameClock(self.sample_rate, self.hop, self.decimation)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["offset_rule"] = f"max({self.offset_min}, {self.offset_ratio}*duration)"
        return d


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_ALIASES = {"lambda": "lam"}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        return {"float": float, "int": int, "str": str}[kind](raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None


def load_config_file(path: str | Path) -> dict:
    """Read ``[lyricsync]`` key = value pairs from an INI-style file."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"config file {path} not readable")
    if not parser.has_section("lyricsync"):
        raise ConfigError(f"{path}: missing [lyricsync] section")
    out = {}
    for key, raw in parser.items("lyricsync"):
        name = _ALIASES.get(key, key)
        if name not in _FIELD_TYPES:
            raise ConfigError(f"{path}: unknown key {key!r}")
        out[name] = _coerce(name, raw)
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Built-in defaults, overridden by the config file, overridden by flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for name in _FIELD_TYPES:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    return RunConfig(**values)


def _report(cfg: RunConfig, **body) -> dict:
    return {"tool": "lyricsync", "version": __version__, "config": cfg.to_dict(), **body}


def _dump(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_json(path: str | Path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}: {exc.msg}") from None


def _phoneme_gram(path: str) -> Posteriorgram:
    value = read_gram(path)
    if isinstance(value, JointTensor):
        return pool_phoneme(value)
    if value.kind != "phoneme":
        raise SchemaError(f"{path}: expected a phoneme posteriorgram or joint tensor, got {value.kind}")
    return value


# ------------------------------------------------------------------ align


def cmd_align(args, cfg: RunConfig) -> int:
    if cfg.alpha > 0 and not args.boundary:
        raise ConfigError("alpha > 0 requires --boundary (use --alpha 0 for plain Viterbi)")
    dictionary = PronouncingDictionary.load(args.dict)
    doc = parse_lyrics(Path(args.lyrics).read_text(encoding="utf-8"), dictionary)
    plan = build_plan(doc, dictionary.phoneme_set, cfg.insert_spaces)
    gram = _phoneme_gram(args.phoneme)
    if cfg.alpha > 0:
        bdr = read_gram(args.boundary)
        if not isinstance(bdr, Posteriorgram) or bdr.kind != "boundary":
            raise SchemaError(f"{args.boundary}: expected a boundary posteriorgram")
        path = viterbi_bdr(gram, bdr, plan, BdrConfig(cfg.alpha, cfg.bdr_mode))
    else:
        path = viterbi(gram, plan)
    words, lines = path_to_spans(path, plan, gram.clock, doc.words)
    report = _report(cfg, **alignment_to_dict(words, lines, path.score), oov=sorted(dictionary.oov))
    _dump(report, args.out)
    if args.lrc:
        Path(args.lrc).write_text(to_lrc(lines), encoding="utf-8")
    return 0


# ------------------------------------------------------------------- eval


def _pairs(est: str, ref: str, suffix: str) -> list[tuple[str, str, str]]:
    """(song, est file, ref file) triples; directories are matched by file name."""
    e, r = Path(est), Path(ref)
    if e.is_dir() != r.is_dir():
        raise ConfigError("--est and --ref must both be files or both be directories")
    if not e.is_dir():
        return [(e.stem, str(e), str(r))]
    out = []
    for ref_file in sorted(r.glob(f"*{suffix}")):
        est_file = e / ref_file.name
        if not est_file.exists():
            raise SchemaError(f"{est_file}: missing estimate for reference {ref_file.name}")
        out.append((ref_file.stem, str(est_file), str(ref_file)))
    if not out:
        raise SchemaError(f"{ref}: no *{suffix} reference files")
    return out


def _onsets(obj, path: str, level: str) -> list[float]:
    key = "words" if level == "word" else "lines"
    items = obj.get(key) if isinstance(obj, dict) else None
    if not isinstance(items, list):
        raise SchemaError(f"{path}: expected a {key!r} list")
    try:
        return [float(it["onset"]) for it in items]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: bad {key} entry: {exc!r}") from None


def _eval_lyrics_one(job):
    song, est, ref, level, tol = job
    ev = eval_alignment(_onsets(_load_json(est), est, level), _onsets(_load_json(ref), ref, level), tol, level)
    return {"song": song, "aae": ev.aae, "pco": ev.pco}


def _events(obj, path: str) -> list[float]:
    if isinstance(obj, dict) and "events" in obj:
        items = obj["events"]
    elif isinstance(obj, dict) and "lines" in obj:
        items = [ln["onset"] for ln in obj["lines"]]
    elif isinstance(obj, list):
        items = obj
    else:
        raise SchemaError(f"{path}: expected {{'events': [...]}} or an alignment with 'lines'")
    try:
        return sorted(float(x) for x in items)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: bad event: {exc!r}") from None


def _eval_boundary_one(job):
    song, est, ref, window = job
    ev = eval_boundary(_events(_load_json(est), est), _events(_load_json(ref), ref), window)
    row = {"song": song, "precision": ev.precision, "recall": ev.recall, "f_score": ev.f_score}
    if ev.empty:
        row["empty"] = True
    return row


def _eval_notes_one(job):
    song, est, ref, kw = job
    ev = eval_notes(load_notes(est), load_notes(ref), **kw)
    return {"song": song, **ev.to_dict()}


def _run_batch(fn, jobs, n_jobs: int) -> list[dict]:
    if n_jobs <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, jobs))


def cmd_eval_lyrics(args, cfg: RunConfig) -> int:
    jobs = [(s, e, r, args.level, cfg.pco_tol) for s, e, r in _pairs(args.est, args.ref, ".json")]
    rows = _run_batch(_eval_lyrics_one, jobs, args.jobs)
    corpus = corpus_alignment([AlignEval(r["aae"], r["pco"], args.level) for r in rows])
    report = _report(cfg, level=args.level, songs=rows, corpus={"aae": corpus.aae, "pco": corpus.pco})
    _dump(report, args.out)
    if args.csv:
        _write_csv(args.csv, rows)
    return 0


def _write_csv(path, rows):
    buf = io.StringIO()
    keys = [k for k in rows[0] if k != "empty"]
    writer = csv.DictWriter(buf, fieldnames=keys, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _curve(path: str) -> np.ndarray:
    value = read_gram(path)
    if not isinstance(value, Posteriorgram) or value.kind != "boundary":
        raise SchemaError(f"{path}: expected a boundary posteriorgram")
    return BoundaryCurve.from_posteriorgram(value).values


def cmd_eval_boundary(args, cfg: RunConfig) -> int:
    jobs = [(s, e, r, cfg.bdr_window) for s, e, r in _pairs(args.est, args.ref, ".json")]
    rows = _run_batch(_eval_boundary_one, jobs, args.jobs)
    extra = {}
    if args.est_curve or args.ref_curve:
        if not (args.est_curve and args.ref_curve):
            raise ConfigError("AUC needs both --est-curve and --ref-curve")
        extra["auc"] = eval_auc(_curve(args.est_curve), _curve(args.ref_curve))
    report = _report(cfg, songs=rows, corpus=corpus_mean(rows), **extra)
    _dump(report, args.out)
    if args.csv:
        _write_csv(args.csv, rows)
    return 0


def cmd_eval_notes(args, cfg: RunConfig) -> int:
    kw = dict(
        onset_tol=cfg.onset_tol,
        offset_ratio=cfg.offset_ratio,
        offset_min=cfg.offset_min,
        pitch_tol=cfg.pitch_tol_cents,
        octave_wrap=cfg.octave_wrap,
    )
    jobs = [(s, e, r, kw) for s, e, r in _pairs(args.est, args.ref, ".json")]
    rows = _run_batch(_eval_notes_one, jobs, args.jobs)
    report = _report(cfg, songs=rows, corpus=corpus_mean(rows))
    _dump(report, args.out)
    if args.csv:
        _write_csv(args.csv, rows)
    return 0


# ------------------------------------------------------------ thin wrappers


def cmd_loss(args, cfg: RunConfig) -> int:
    if args.plan:
        plan = PhonemePlan.from_dict(_load_json(args.plan))
    elif args.lyrics and args.dict:
        dictionary = PronouncingDictionary.load(args.dict)
        doc = parse_lyrics(Path(args.lyrics).read_text(encoding="utf-8"), dictionary)
        plan = build_plan(doc, dictionary.phoneme_set, cfg.insert_spaces)
    else:
        raise ConfigError("loss needs --plan, or --lyrics with --dict")

    value = read_gram(args.gram)
    if isinstance(value, JointTensor):
        phone, pitch = pool_phoneme(value), pool_pitch(value)
    elif value.kind == "phoneme":
        phone, pitch = value, None
    else:
        raise SchemaError(f"{args.gram}: expected a joint tensor or phoneme posteriorgram")
    phone_loss, _ = ctc_loss(phone, plan)

    pitch_loss = 0.0
    if args.pitch_targets:
        if pitch is None:
            raise ConfigError("pitch targets need a joint tensor input")
        obj = _load_json(args.pitch_targets)
        pitch_loss = pitch_ce(pitch, obj["targets"], obj.get("mask"))
    report = total_loss(phone_loss, pitch_loss, cfg.lam)
    _dump(_report(cfg, loss=report.to_dict()), args.out)
    return 0


def cmd_synth(args, cfg: RunConfig) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc, plan, _, text, dict_lines = default_plan_song(
        args.seed, insert_spaces=cfg.insert_spaces, n_lines=args.lines
    )
    layout = PitchLayout(cfg.pitch_classes)
    spec = SynthSpec(args.seed, 1, plan, args.noise, args.blur, cfg.clock, layout=layout)
    n_frames = args.frames or int(np.ceil(1.5 * (2 * spec.min_run * len(plan.labels) + len(plan))))
    spec.n_frames = n_frames
    case = synth_case(spec)

    write_gram(case.joint_tensor, out / "joint.pgrm")
    write_gram(pool_phoneme(case.joint_tensor), out / "phoneme.pgrm")
    write_gram(pool_pitch(case.joint_tensor), out / "pitch.pgrm")
    bdr = case.boundary_curve.to_posteriorgram()
    write_gram(bdr, out / "boundary.pgrm")
    (out / "lyrics.txt").write_text(text, encoding="utf-8")
    (out / "dict.txt").write_text("\n".join(dict_lines) + "\n", encoding="utf-8")
    (out / "plan.json").write_text(json.dumps(plan.to_dict(), indent=2) + "\n")

    words = doc.words
    truth_words = [
        {"word": words[w].text, "index": w, "line": words[w].line_idx, "onset": on, "offset": off}
        for w, on, off in case.true_word_spans
    ]
    truth_lines = []
    for w in truth_words:
        if truth_lines and truth_lines[-1]["line"] == w["line"]:
            truth_lines[-1]["offset"] = w["offset"]
            truth_lines[-1]["text"] += " " + w["word"]
        else:
            truth_lines.append({"line": w["line"], "text": w["word"], "onset": w["onset"], "offset": w["offset"]})
    (out / "truth_alignment.json").write_text(json.dumps({"words": truth_words, "lines": truth_lines}, indent=2) + "\n")
    (out / "truth_notes.json").write_text(json.dumps(notes_to_json(case.true_notes), indent=2) + "\n")
    (out / "truth_boundaries.json").write_text(json.dumps({"events": case.true_line_onsets}, indent=2) + "\n")
    (out / "pitch_targets.json").write_text(json.dumps({"targets": case.pitch_classes.tolist()}) + "\n")
    _dump(_report(cfg, fixture=str(out), n_frames=n_frames, seed=args.seed, noise=args.noise), args.out)
    return 0


def cmd_window(args, cfg: RunConfig) -> int:
    obj = _load_json(args.words)
    try:
        words = [(float(w["onset"]), float(w["offset"])) for w in obj["words"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{args.words}: bad word entry: {exc!r}") from None
    windows = window_samples(words, args.window, args.window_hop)
    body = [{"start": s, "end": s + args.window, "words": idx} for s, idx in windows]
    _dump(_report(cfg, window=args.window, hop=args.window_hop, windows=body), args.out)
    return 0


# ---------------------------------------------------------------- parser


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with a [lyricsync] section")
    p.add_argument("--lambda", dest="lam", type=float, help=f"pitch loss weight (sweep grid {LAMBDA_GRID})")
    p.add_argument("--alpha", type=float, help=f"boundary bonus weight (sweep grid {ALPHA_GRID})")
    p.add_argument("--bdr-mode", dest="bdr_mode", choices=["entry", "occupancy"])
    p.add_argument("--pco-tol", dest="pco_tol", type=float)
    p.add_argument("--bdr-window", dest="bdr_window", type=float)
    p.add_argument("--gaussian-width", dest="gaussian_width", type=float)
    p.add_argument("--onset-tol", dest="onset_tol", type=float)
    p.add_argument("--offset-ratio", dest="offset_ratio", type=float)
    p.add_argument("--offset-min", dest="offset_min", type=float)
    p.add_argument("--pitch-tol", dest="pitch_tol_cents", type=float)
    p.add_argument("--pitch-classes", dest="pitch_classes", type=int, choices=[47, 48])
    p.add_argument("--sample-rate", dest="sample_rate", type=float)
    p.add_argument("--hop-length", dest="hop", type=float, help="frame hop in samples")
    p.add_argument("--decimation", dest="decimation", type=float)
    p.add_argument("--spaces", dest="insert_spaces", action="store_true", default=None)
    p.add_argument("--no-spaces", dest="insert_spaces", action="store_false")
    p.set_defaults(insert_spaces=None)
    p.add_argument("--out", help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lyricsync", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lyricsync {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align lyrics to a phoneme posteriorgram")
    p.add_argument("--lyrics", required=True)
    p.add_argument("--phoneme", required=True, help="phoneme posteriorgram or joint tensor (PGRM)")
    p.add_argument("--boundary", help="boundary posteriorgram (PGRM)")
    p.add_argument("--dict", required=True, help="CMU-format pronouncing dictionary")
    p.add_argument("--lrc", help="also write line timings as LRC")
    _add_config_flags(p)
    p.set_defaults(func=cmd_align)

    for name, func, help_ in (
        ("eval-lyrics", cmd_eval_lyrics, "AAE / PCO of word or line onsets"),
        ("eval-notes", cmd_eval_notes, "COn / COnP / COnPOff note F-scores"),
        ("eval-boundary", cmd_eval_boundary, "boundary precision / recall / F (and AUC)"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--est", required=True, help="estimate JSON file or directory")
        p.add_argument("--ref", required=True, help="reference JSON file or directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers across songs")
        p.add_argument("--csv", help="also write per-song rows as CSV")
        if name == "eval-lyrics":
            p.add_argument("--level", choices=["word", "line"], default="word")
        if name == "eval-boundary":
            p.add_argument("--est-curve", help="predicted boundary curve (PGRM) for AUC")
            p.add_argument("--ref-curve", help="reference boundary curve (PGRM) for AUC")
        _add_config_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("loss", help="multi-task loss of a joint tensor")
    p.add_argument("--gram", required=True, help="joint tensor or phoneme posteriorgram (PGRM)")
    p.add_argument("--plan", help="plan JSON")
    p.add_argument("--lyrics")
    p.add_argument("--dict")
    p.add_argument("--pitch-targets", help='JSON {"targets": [...], "mask": [...]}')
    _add_config_flags(p)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("synth", help="write a synthetic fixture directory")
    p.add_argument("--dir", dest="out_dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lines", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--blur", type=int, default=0)
    p.add_argument("--frames", type=int, help="number of frames (default: sized from the plan)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("window", help="sliding-window sample generation")
    p.add_argument("--words", required=True, help="alignment JSON with word onsets/offsets")
    p.add_argument("--window", type=float, default=5.6)
    p.add_argument("--window-hop", dest="window_hop", type=float, default=2.8)
    _add_config_flags(p)
    p.set_defaults(func=cmd_window)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except LyricsyncError as exc:
        _error(exc.exit_code, exc)
        return exc.exit_code
    except (OSError, KeyError, ValueError) as exc:
        _error(3, exc)
        return 3


def _error(code: int, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
