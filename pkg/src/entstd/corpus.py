"""Entity/mention corpora: loading, validation, and synthetic generation.

A corpus bundles a knowledge base of entities (each with a canonical name
and optional associated mentions) and two disjoint mention splits. The
split discipline is strict: no test surface may appear among the train
surfaces or the knowledge-base mentions, compared as exact strings after
whitespace canonicalization. Case is never folded; distinctions such as
"DB2" vs "db2" carry signal.

Dataset files are UTF-8 JSON lines. Knowledge-base records look like
``{"id": ..., "name": ..., "mentions": [...]}``; split records look like
``{"surface": ..., "id": ...}``.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusValidationError, DataError

_WS_RUN = re.compile(r"\s+")


def canonicalize(text: str) -> str:
    """Trim and collapse whitespace runs to single spaces. No case folding."""
    return _WS_RUN.sub(" ", text.strip())


@dataclass(frozen=True)
class Entity:
    id: str
    canonical_name: str
    kb_mentions: tuple[str, ...] = ()


@dataclass(frozen=True)
class MentionRecord:
    surface: str
    entity_id: str


@dataclass(frozen=True)
class Corpus:
    """Immutable entity set plus train/test mention splits."""

    entities: tuple[Entity, ...]
    train: tuple[MentionRecord, ...]
    test: tuple[MentionRecord, ...]
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {e.id: e for e in self.entities})

    def entity(self, entity_id: str) -> Entity:
        return self._by_id[entity_id]

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._by_id


@dataclass(frozen=True)
class ValidationFinding:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


def validate_corpus(corpus: Corpus) -> list[ValidationFinding]:
    """Check every corpus invariant; returns one finding per violation.

    An empty report means the corpus is well-formed. Violations are report
    content, not exceptions, so damaged corpora can be inspected.
    """
    findings = []
    seen_ids = set()
    for ent in corpus.entities:
        if ent.id in seen_ids:
            findings.append(ValidationFinding("duplicate-entity-id", ent.id))
        seen_ids.add(ent.id)
        if not canonicalize(ent.canonical_name):
            findings.append(ValidationFinding("empty-canonical-name", f"entity {ent.id}"))

    for split_name, records in (("train", corpus.train), ("test", corpus.test)):
        surface_owner: dict[str, str] = {}
        for rec in records:
            if not canonicalize(rec.surface):
                findings.append(
                    ValidationFinding("empty-surface", f"{split_name} record for {rec.entity_id}")
                )
            if not corpus.has_entity(rec.entity_id):
                findings.append(
                    ValidationFinding(
                        "dangling-entity-id",
                        f"{split_name} record {rec.surface!r} -> {rec.entity_id}",
                    )
                )
            key = canonicalize(rec.surface)
            owner = surface_owner.setdefault(key, rec.entity_id)
            if owner != rec.entity_id:
                findings.append(
                    ValidationFinding(
                        "ambiguous-surface",
                        f"{split_name} surface {rec.surface!r} maps to both {owner} and {rec.entity_id}",
                    )
                )

    train_and_kb = {canonicalize(r.surface) for r in corpus.train}
    for ent in corpus.entities:
        train_and_kb.update(canonicalize(m) for m in ent.kb_mentions)
    overlap = sorted(
        {canonicalize(r.surface) for r in corpus.test} & train_and_kb
    )
    for surface in overlap:
        findings.append(ValidationFinding("split-overlap", f"test surface {surface!r}"))
    return findings


def _check(corpus: Corpus) -> Corpus:
    findings = validate_corpus(corpus)
    if findings:
        raise CorpusValidationError(findings)
    return corpus


def _parse_jsonl(path: Path, required: tuple[str, ...]) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
            if not isinstance(rec, dict) or any(k not in rec for k in required):
                raise DataError(f"{path}:{lineno}: record missing fields {required}")
            records.append(rec)
    return records


def load_corpus(kb_path, train_path, test_path) -> Corpus:
    """Load a corpus from knowledge-base and split files, enforcing invariants."""
    kb_path, train_path, test_path = Path(kb_path), Path(train_path), Path(test_path)
    for p in (kb_path, train_path, test_path):
        if not p.exists():
            raise DataError(f"dataset file not found: {p}")
    entities = tuple(
        Entity(id=str(r["id"]), canonical_name=str(r["name"]), kb_mentions=tuple(r.get("mentions", ())))
        for r in _parse_jsonl(kb_path, ("id", "name"))
    )
    splits = []
    for path in (train_path, test_path):
        splits.append(
            tuple(
                MentionRecord(surface=str(r["surface"]), entity_id=str(r["id"]))
                for r in _parse_jsonl(path, ("surface", "id"))
            )
        )
    return _check(Corpus(entities=entities, train=splits[0], test=splits[1]))


def save_corpus(corpus: Corpus, kb_path, train_path, test_path) -> None:
    """Write the corpus back out as JSON lines (inverse of load_corpus)."""
    with open(kb_path, "w", encoding="utf-8") as fh:
        for ent in corpus.entities:
            fh.write(
                json.dumps(
                    {"id": ent.id, "name": ent.canonical_name, "mentions": list(ent.kb_mentions)},
                    ensure_ascii=False,
                )
                + "\n"
            )
    for path, records in ((train_path, corpus.train), (test_path, corpus.test)):
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(
                    json.dumps({"surface": rec.surface, "id": rec.entity_id}, ensure_ascii=False)
                    + "\n"
                )


PERTURBATION_OPS = ("case-flip", "token-drop", "token-swap", "suffix-append", "character-typo")


@dataclass(frozen=True)
class SynthesisConfig:
    """Recipe for a deterministic synthetic corpus.

    ``mentions_per_entity`` counts mentions across both splits; roughly 40%
    of each entity's mentions land in the test split, mirroring the usual
    60-40 discipline while keeping at least two train samples per class
    once an entity has three mentions.
    """

    n_entities: int
    mentions_per_entity: int
    ops: tuple[str, ...] = PERTURBATION_OPS
    seed: int = 0

    def __post_init__(self):
        if self.n_entities < 1 or self.mentions_per_entity < 1:
            raise ValueError("n_entities and mentions_per_entity must be positive")
        if not self.ops:
            raise ValueError("at least one perturbation op must be enabled")
        unknown = set(self.ops) - set(PERTURBATION_OPS)
        if unknown:
            raise ValueError(f"unknown perturbation ops: {sorted(unknown)}")


_NAME_PREFIXES = (
    "Apache", "IBM", "Oracle", "Micro", "Open", "Red", "Ultra", "Neo",
    "Hyper", "Cloud", "Font", "Blue", "Iron", "Swift",
)
_NAME_CORES = (
    "Zorvex", "Quantal", "Brimworks", "Lumifer", "Dextrion", "Cavatica",
    "Nimbrix", "Tessera", "Veldrome", "Korvane", "Plextora", "Silvanix",
    "Ombrelle", "Ferrustat", "Gantrix", "Helvoria", "Juniprex", "Malakite",
    "Norvatex", "Ostrafel", "Pellucid", "Quorvane", "Rubistor", "Sarmenta",
    "Tavrosse", "Umbratek", "Vintrelle", "Wexfordia", "Xalvador", "Yentriva",
    "Zephyrol", "Ardvexa", "Boltrane", "Cryolith", "Drumvale", "Elstrix",
)
_NAME_SUFFIXES = ("Server", "DB", "Studio", "Engine", "Cloud", "Suite", "Portal", "Gateway")
_APPEND_TOKENS = ("v2", "v3", "2019", "2021", "Enterprise", "Pro", "LTS", "CE")

# Mention recipe: 1-3 structural ops, then a case transform. Uppercase
# dominates so that raw case-sensitive n-gram overlap with the TitleCase
# canonical names is weak; recovering the entity requires learning the
# case variants from the train split.
_STRUCTURAL_OP_WEIGHTS = (0.0, 0.55, 0.30, 0.15)
_CASE_LOWER, _CASE_UPPER = 0.06, 0.84


def _make_names(rng: random.Random, count: int) -> list[str]:
    limit = len(_NAME_PREFIXES) * len(_NAME_CORES) * len(_NAME_SUFFIXES)
    if count > limit:
        raise ValueError(f"cannot generate more than {limit} distinct entity names")
    names: list[str] = []
    seen = set()
    while len(names) < count:
        name = f"{rng.choice(_NAME_PREFIXES)} {rng.choice(_NAME_CORES)} {rng.choice(_NAME_SUFFIXES)}"
        if name not in seen:
            seen.add(name)
            names.append(name)
    return names


def _perturb_once(rng: random.Random, surface: str, op: str) -> str:
    tokens = surface.split(" ")
    if op == "token-drop":
        # Never drop the longest token: it is the most distinctive one, and
        # removing it would detach the mention from its entity.
        if len(tokens) < 2:
            return surface
        longest = max(range(len(tokens)), key=lambda i: len(tokens[i]))
        candidates = [i for i in range(len(tokens)) if i != longest]
        del tokens[rng.choice(candidates)]
        return " ".join(tokens)
    if op == "token-swap":
        if len(tokens) < 2:
            return surface
        i = rng.randrange(len(tokens) - 1)
        tokens[i], tokens[i + 1] = tokens[i + 1], tokens[i]
        return " ".join(tokens)
    if op == "suffix-append":
        return surface + " " + rng.choice(_APPEND_TOKENS)
    if op == "character-typo":
        i = rng.randrange(len(tokens))
        tok = tokens[i]
        if not tok:
            return surface
        pos = rng.randrange(len(tok))
        kind = rng.randrange(4)
        alphabet = "abcdefghijklmnopqrstuvwxyz"
        if kind == 0 and len(tok) > 2:  # delete
            tok = tok[:pos] + tok[pos + 1 :]
        elif kind == 1:  # insert
            tok = tok[:pos] + rng.choice(alphabet) + tok[pos:]
        elif kind == 2:  # substitute
            tok = tok[:pos] + rng.choice(alphabet) + tok[pos + 1 :]
        elif pos + 1 < len(tok):  # transpose
            tok = tok[:pos] + tok[pos + 1] + tok[pos] + tok[pos + 2 :]
        tokens[i] = tok
        return " ".join(tokens)
    raise ValueError(f"unknown perturbation op {op!r}")


def _apply_case(rng: random.Random, surface: str) -> str:
    roll = rng.random()
    if roll < _CASE_LOWER:
        return surface.lower()
    if roll < _CASE_LOWER + _CASE_UPPER:
        return surface.upper()
    return " ".join(
        tok.lower() if rng.random() < 0.5 else tok.upper() for tok in surface.split(" ")
    )


def _make_mention(rng: random.Random, name: str, ops: tuple[str, ...]) -> str:
    structural = [op for op in ops if op != "case-flip"]
    surface = name
    if structural:
        n_ops = rng.choices(range(len(_STRUCTURAL_OP_WEIGHTS)), weights=_STRUCTURAL_OP_WEIGHTS)[0]
        for _ in range(n_ops):
            surface = _perturb_once(rng, surface, rng.choice(structural))
    if "case-flip" in ops:
        surface = _apply_case(rng, surface)
    return canonicalize(surface)


def synthesize_corpus(cfg: SynthesisConfig) -> Corpus:
    """Generate a deterministic corpus of perturbed-name mentions.

    Every surface in the corpus is globally unique, so the split invariants
    hold by construction and top-1 accuracy is well-defined.
    """
    rng = random.Random(f"entstd-synth:{cfg.seed}")
    ops = tuple(sorted(set(cfg.ops)))
    names = _make_names(rng, cfg.n_entities)
    taken = set(names)
    entities = []
    train: list[MentionRecord] = []
    test: list[MentionRecord] = []
    for i, name in enumerate(names):
        eid = f"E{i:04d}"
        entities.append(Entity(id=eid, canonical_name=name))
        mentions: list[str] = []
        attempts = 0
        while len(mentions) < cfg.mentions_per_entity:
            attempts += 1
            if attempts > 5000:
                raise ValueError(
                    f"cannot generate {cfg.mentions_per_entity} distinct mentions for {name!r}; "
                    "enable more perturbation ops or lower mentions_per_entity"
                )
            surface = _make_mention(rng, name, ops)
            if surface and surface != name and surface not in taken:
                taken.add(surface)
                mentions.append(surface)
        n_test = int(0.4 * len(mentions))
        for surface in mentions[: len(mentions) - n_test]:
            train.append(MentionRecord(surface=surface, entity_id=eid))
        for surface in mentions[len(mentions) - n_test :]:
            test.append(MentionRecord(surface=surface, entity_id=eid))
    return _check(Corpus(entities=tuple(entities), train=tuple(train), test=tuple(test)))
