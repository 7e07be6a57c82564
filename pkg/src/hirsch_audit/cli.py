"""Command-line entry point: ``hirsch-audit {metrics,verify,perturb,plot}``.

Settings come from flags and, optionally, a JSON file named by the
``HIRSCH_AUDIT_CONFIG`` environment variable whose keys mirror the flags
(``source``, ``ledger``, ``candidate_rule``, ``window``, ``self_cite``,
``seed``, ``out``, ...). Flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import AuditError, ValidationError
from .ingest import (
    DEFAULT_MAX_EDIT_DISTANCE,
    CorrectionsLedger,
    VenueAliases,
    apply_corrections,
    dedup_within_source,
    key_from_mapping,
    load_ledger,
    match_across_sources,
    parse_records,
)
from .metrics import fit_power_curve, format_mean, h_index, mean_citations, rank_profile, total_citations
from .robustness import Perturbation, sensitivity_csv, sensitivity_report
from .verify import (
    CANDIDATE_RULES,
    DEFAULT_WINDOW,
    SELF_CITE_MODES,
    build_verification_report,
    combine_max,
)

log = logging.getLogger("hirsch_audit")

CONFIG_ENV = "HIRSCH_AUDIT_CONFIG"
DEFAULT_OUT = "audit_out"


@dataclass
class RunConfig:
    sources: list[tuple[str, Path]] = field(default_factory=list)
    ledger: Optional[Path] = None
    max_edit_distance: int = DEFAULT_MAX_EDIT_DISTANCE
    candidate_rule: str = "le"
    window: int = DEFAULT_WINDOW
    self_cite: str = "broad"
    focal_authors: list[str] = field(default_factory=list)
    claimed: dict[str, int] = field(default_factory=dict)
    venue_aliases: Optional[Path] = None
    out: Optional[Path] = None
    seed: int = 0
    plan: Optional[Path] = None
    profile: str = "max"

    @property
    def out_dir(self) -> Path:
        return self.out if self.out is not None else Path(DEFAULT_OUT)

    def validate(self):
        if not self.sources:
            raise ValidationError("at least one --source tag=path is required")
        tags = [t for t, _ in self.sources]
        if len(set(tags)) != len(tags):
            raise ValidationError(f"source tags must be distinct: {tags}")
        if self.candidate_rule not in CANDIDATE_RULES:
            raise ValidationError(f"--candidate-rule must be one of {CANDIDATE_RULES}")
        if self.self_cite not in SELF_CITE_MODES:
            raise ValidationError(f"--self-cite must be one of {SELF_CITE_MODES}")
        if self.window < 0:
            raise ValidationError("--window must be >= 0")
        if self.max_edit_distance < 0:
            raise ValidationError("--max-edit-distance must be >= 0")


def _split_pair(text: str, flag: str) -> tuple[str, str]:
    tag, sep, value = text.partition("=")
    if not sep or not tag.strip() or not value.strip():
        raise ValidationError(f"{flag} expects tag=value, got {text!r}")
    return tag.strip(), value.strip()


def _pairs(value, flag) -> list[tuple[str, str]]:
    if value is None:
        return []
    if isinstance(value, dict):
        return [(str(k), str(v)) for k, v in value.items()]
    if isinstance(value, str):
        value = [value]
    return [_split_pair(v, flag) for v in value]


def _file_settings(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON config ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    base = path.parent

    def rel(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    out = {}
    if "source" in data or "sources" in data:
        out["sources"] = [(t, rel(p)) for t, p in _pairs(data.get("source", data.get("sources")), "source")]
    for name in ("ledger", "venue_aliases", "out", "plan"):
        if data.get(name) is not None:
            out[name] = rel(data[name])
    for name in ("candidate_rule", "self_cite", "profile"):
        if data.get(name) is not None:
            out[name] = str(data[name])
    for name in ("window", "seed", "max_edit_distance"):
        if data.get(name) is not None:
            out[name] = int(data[name])
    if data.get("focal_author") is not None:
        fa = data["focal_author"]
        out["focal_authors"] = [fa] if isinstance(fa, str) else list(fa)
    if data.get("claimed") is not None:
        out["claimed"] = {t: int(v) for t, v in _pairs(data["claimed"], "claimed")}
    return out


def build_config(args: argparse.Namespace, env=None) -> RunConfig:
    env = os.environ if env is None else env
    settings: dict = {}
    if env.get(CONFIG_ENV):
        path = Path(env[CONFIG_ENV])
        if not path.is_file():
            raise ValidationError(f"{CONFIG_ENV} points to a missing file: {path}")
        settings.update(_file_settings(path))
    if args.source:
        settings["sources"] = [(t, Path(p)) for t, p in _pairs(args.source, "--source")]
    if args.claimed:
        settings["claimed"] = {t: int(v) for t, v in _pairs(args.claimed, "--claimed")}
    if args.focal_author:
        settings["focal_authors"] = list(args.focal_author)
    for name in ("ledger", "venue_aliases", "out", "plan"):
        value = getattr(args, name, None)
        if value is not None:
            settings[name] = Path(value)
    for name in ("candidate_rule", "self_cite", "window", "seed", "max_edit_distance", "profile"):
        value = getattr(args, name, None)
        if value is not None:
            settings[name] = value
    cfg = RunConfig(**settings)
    cfg.validate()
    return cfg


# -- pipeline --------------------------------------------------------------


def _aliases(cfg: RunConfig) -> VenueAliases:
    if cfg.venue_aliases is None:
        return VenueAliases()
    if not cfg.venue_aliases.is_file():
        raise FileNotFoundError(f"venue alias file not found: {cfg.venue_aliases}")
    return VenueAliases.from_file(cfg.venue_aliases)


def load_raw(cfg: RunConfig, aliases: VenueAliases) -> dict:
    raw = {}
    for tag, path in cfg.sources:
        if not path.is_file():
            raise FileNotFoundError(f"source file not found: {path}")
        raw[tag] = parse_records(path, source_id=tag, aliases=aliases)
    return raw


def repair(records_by_source: dict, cfg: RunConfig, ledger=None) -> tuple[dict, list[str]]:
    notes = []
    out = {}
    if ledger is not None:
        stray = sorted({e.source_id for e in ledger.edits} - set(records_by_source))
        if stray:
            log.warning("ledger edits for unknown sources ignored: %s", ", ".join(stray))
    for tag, records in records_by_source.items():
        if ledger is not None:
            records = apply_corrections(records, CorrectionsLedger(tuple(e for e in ledger.edits if e.source_id == tag)))
        records, report = dedup_within_source(records, cfg.max_edit_distance)
        notes.extend(report.lines())
        out[tag] = records
    return out, notes


def corrected_matches(cfg: RunConfig):
    aliases = _aliases(cfg)
    raw = load_raw(cfg, aliases)
    ledger = None
    if cfg.ledger is not None:
        if not cfg.ledger.is_file():
            raise FileNotFoundError(f"ledger file not found: {cfg.ledger}")
        ledger = load_ledger(cfg.ledger, aliases)
    fixed, notes = repair(raw, cfg, ledger)
    return match_across_sources(fixed, cfg.max_edit_distance), notes


def _h_line(label, per_source: dict, matched) -> str:
    parts = [f"{tag}: {h_index(r.count for r in recs)}" for tag, recs in per_source.items()]
    if len(per_source) > 1:
        parts.append(f"max: {h_index(combine_max(matched))}")
    return f"{label}: " + ", ".join(parts)


def cmd_metrics(cfg: RunConfig, stdout) -> int:
    aliases = _aliases(cfg)
    raw = load_raw(cfg, aliases)
    deduped, _ = repair(raw, cfg)
    naive_matched = match_across_sources(deduped, cfg.max_edit_distance)
    print(_h_line("naive h", raw, naive_matched), file=stdout)
    final = raw
    results = {"naive": _h_summary(raw, naive_matched)}
    if cfg.ledger is not None:
        if not cfg.ledger.is_file():
            raise FileNotFoundError(f"ledger file not found: {cfg.ledger}")
        ledger = load_ledger(cfg.ledger, aliases)
        final, notes = repair(raw, cfg, ledger)
        matched = match_across_sources(final, cfg.max_edit_distance)
        print(_h_line("corrected h", final, matched), file=stdout)
        results["corrected"] = _h_summary(final, matched)
    print("", file=stdout)
    print(f"{'source':<8} {'records':>7} {'total':>7} {'mean':>8} {'h':>4}", file=stdout)
    rows = []
    for tag, recs in final.items():
        counts = [r.count for r in recs]
        mean = format_mean(mean_citations(counts)) if counts else "-"
        print(f"{tag:<8} {len(counts):>7} {total_citations(counts):>7} {mean:>8} {h_index(counts):>4}", file=stdout)
        rows.append({"source": tag, "records": len(counts), "total": total_citations(counts),
                     "mean": None if not counts else mean, "h": h_index(counts)})
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        with open(cfg.out / "metrics.jsonl", "w", encoding="utf-8") as fh:
            for stage, values in results.items():
                fh.write(json.dumps({"record": "h", "stage": stage, **values}) + "\n")
            for row in rows:
                fh.write(json.dumps({"record": "source", **row}) + "\n")
    return 0


def _h_summary(per_source, matched) -> dict:
    out = {tag: h_index(r.count for r in recs) for tag, recs in per_source.items()}
    if len(per_source) > 1:
        out["max"] = h_index(combine_max(matched))
    return out


def cmd_verify(cfg: RunConfig, stdout) -> int:
    matched, notes = corrected_matches(cfg)
    report = build_verification_report(
        matched,
        window=cfg.window,
        candidate_rule=cfg.candidate_rule,
        self_cite_mode=cfg.self_cite,
        focal_authors=cfg.focal_authors or None,
        claimed_h=cfg.claimed,
    )
    report.annotations[:0] = [f"repair: {n}" for n in notes]
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    text = report.to_text()
    (cfg.out_dir / "verify_report.txt").write_text(text, encoding="utf-8")
    (cfg.out_dir / "verify_report.jsonl").write_text(report.to_jsonl(), encoding="utf-8")
    stdout.write(text)
    return 0


def load_plan(path: Path, aliases: VenueAliases) -> list[Perturbation]:
    if not path.is_file():
        raise FileNotFoundError(f"plan file not found: {path}")
    plan = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                kind = obj["kind"]
                key = key_from_mapping(obj["key"], aliases) if obj.get("key") else None
                plan.append(
                    Perturbation(
                        kind=kind,
                        key=key,
                        delta=obj.get("delta"),
                        n_records=obj.get("n_records"),
                        count_each=obj.get("count_each"),
                        fraction=obj.get("fraction"),
                        label=obj.get("label"),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, AuditError) as exc:
                raise ValidationError(f"{path}:{line_no}: malformed plan entry ({exc})") from None
    if not plan:
        raise ValidationError(f"{path}: plan is empty")
    return plan


def cmd_perturb(cfg: RunConfig, stdout) -> int:
    if cfg.plan is None:
        raise ValidationError("perturb needs --plan")
    plan = load_plan(cfg.plan, _aliases(cfg))
    matched, _ = corrected_matches(cfg)
    rows = sensitivity_report(combine_max(matched), plan, cfg.seed)
    text = sensitivity_csv(rows)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "sensitivity.csv").write_text(text, encoding="utf-8")
    stdout.write(text)
    return 0


def plot_data(profile) -> str:
    """Rank/count pairs with fitted values; fit parameters and h in comment lines."""
    fit = fit_power_curve(profile)
    h = h_index(profile)
    lines = [
        "# fit: count = a * rank^b",
        f"# a={fit.a:.6g}",
        f"# b={fit.b:.6g}",
        f"# r2={fit.r2:.6f}",
        f"# h={h}",
        "rank,count,fit",
    ]
    for rank, (_, count) in enumerate(profile.entries, start=1):
        lines.append(f"{rank},{count},{fit.predict(rank):.4f}")
    return "\n".join(lines) + "\n"


def cmd_plot(cfg: RunConfig, stdout) -> int:
    matched, _ = corrected_matches(cfg)
    if cfg.profile == "union":
        report = build_verification_report(
            matched, window=cfg.window, candidate_rule=cfg.candidate_rule,
            self_cite_mode=cfg.self_cite, focal_authors=cfg.focal_authors or None,
        )
        profile = rank_profile((e.key, e.cites) for e in report.entries)
    elif cfg.profile == "max":
        profile = combine_max(matched)
    else:
        raise ValidationError("--profile must be max or union")
    if len(profile) == 0:
        raise ValidationError("profile is empty; nothing to plot")
    text = plot_data(profile)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "zipf.csv").write_text(text, encoding="utf-8")
    stdout.write(text)
    return 0


COMMANDS = {"metrics": cmd_metrics, "verify": cmd_verify, "perturb": cmd_perturb, "plot": cmd_plot}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--source", action="append", metavar="TAG=PATH",
                        help="citation export for one source (repeatable)")
    common.add_argument("--ledger", metavar="PATH", help="corrections ledger (JSON lines)")
    common.add_argument("--candidate-rule", choices=CANDIDATE_RULES, default=None)
    common.add_argument("--window", type=int, default=None, help="worklist window below h")
    common.add_argument("--self-cite", choices=SELF_CITE_MODES, default=None)
    common.add_argument("--focal-author", action="append", metavar="NAME")
    common.add_argument("--claimed", action="append", metavar="TAG=H",
                        help="externally reported h to check against (repeatable)")
    common.add_argument("--venue-aliases", metavar="PATH", help="JSON alias->code venue table")
    common.add_argument("--max-edit-distance", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hirsch-audit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("metrics", parents=[common], help="naive and corrected h, mean and total citations")
    sub.add_parser("verify", parents=[common], help="threshold worklist, union checks, self-citations")
    p = sub.add_parser("perturb", parents=[common], help="sensitivity of h and mean to record errors")
    p.add_argument("--plan", metavar="PATH", help="perturbation plan (JSON lines)")
    p = sub.add_parser("plot", parents=[common], help="rank-citation data with power-curve fit")
    p.add_argument("--profile", choices=("max", "union"), default=None)
    return parser


def main(argv=None, stdout=None, stderr=None, env=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = logging.StreamHandler(stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    log.propagate = False
    try:
        cfg = build_config(args, env)
        return COMMANDS[args.command](cfg, stdout)
    except (AuditError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
