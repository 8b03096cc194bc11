"""Entity/ontology data model and the on-disk formats built on it.

Formats:

* KB file: UTF-8 JSON lines, one entity per line. Keys: ``id`` (required
  string), ``name`` (required string), ``aliases`` (optional list of
  strings), ``definition`` (optional string), ``contexts`` (optional list
  of strings).
* Alignment file: UTF-8 TSV with columns source_id, target_id, score
  (4 decimals), provenance. No header.
* Reference alignment file: UTF-8 TSV with columns source_id, target_id,
  label (0 or 1). No header.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import IO, Iterable, Iterator

from .errors import DuplicateIdError, KbParseError, ValidationError

MAX_CONTEXTS = 20


class DefinitionOrigin(str, Enum):
    NATIVE = "native"
    EXTERNAL = "external"
    NONE = "none"


@dataclass(frozen=True)
class Entity:
    """One ontology concept: canonical name, aliases, definition, contexts."""

    id: str
    name: str
    aliases: tuple[str, ...] = ()
    definition: str | None = None
    contexts: tuple[str, ...] = ()
    definition_source: DefinitionOrigin = DefinitionOrigin.NONE

    def with_definition(self, text: str, origin: DefinitionOrigin) -> "Entity":
        return replace(self, definition=text, definition_source=origin)

    def with_contexts(self, contexts: Iterable[str]) -> "Entity":
        return replace(self, contexts=tuple(contexts))

    def surface_strings(self) -> set[str]:
        """Lowercased canonical name plus aliases, used for exact matching."""
        strings = {self.name.lower()}
        strings.update(a.lower() for a in self.aliases)
        return strings


@dataclass(frozen=True)
class Ontology:
    entities: tuple[Entity, ...]
    id_index: dict[str, int] = field(compare=False)

    @classmethod
    def from_entities(cls, entities: Iterable[Entity]) -> "Ontology":
        ents = tuple(entities)
        index: dict[str, int] = {}
        for pos, entity in enumerate(ents):
            if entity.id in index:
                raise DuplicateIdError(entity.id)
            index[entity.id] = pos
        return cls(entities=ents, id_index=index)

    def __len__(self) -> int:
        return len(self.entities)

    def __iter__(self) -> Iterator[Entity]:
        return iter(self.entities)

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self.id_index

    def __getitem__(self, entity_id: str) -> Entity:
        return self.entities[self.id_index[entity_id]]

    def map_entities(self, fn) -> "Ontology":
        """Rebuild the ontology with ``fn`` applied to every entity."""
        return Ontology.from_entities(fn(e) for e in self.entities)


@dataclass(frozen=True)
class Alignment:
    source_id: str
    target_id: str
    score: float
    provenance: str  # "exact_match" | "model"

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"alignment score out of range: {self.score}")
        if self.provenance not in ("exact_match", "model"):
            raise ValidationError(f"unknown provenance: {self.provenance!r}")
        if self.provenance == "exact_match" and self.score != 1.0:
            raise ValidationError("exact_match alignments must have score 1.0")


@dataclass(frozen=True)
class ReferenceAlignment:
    """Gold labels over entity id pairs; label 1 marks equivalences."""

    labels: dict[tuple[str, str], int]

    @property
    def pairs(self) -> set[tuple[str, str]]:
        return set(self.labels)

    @property
    def positives(self) -> set[tuple[str, str]]:
        return {pair for pair, label in self.labels.items() if label == 1}


def validate_entity(raw: dict) -> Entity:
    """Normalize one parsed KB object into an Entity.

    Trims all text fields, deduplicates aliases case-insensitively keeping
    the first occurrence, and rejects empty names.
    """
    if not isinstance(raw, dict):
        raise ValidationError(f"entity must be a JSON object, got {type(raw).__name__}")
    entity_id = raw.get("id")
    if not isinstance(entity_id, str) or not entity_id.strip():
        raise ValidationError("missing or empty 'id'")
    name = raw.get("name")
    if not isinstance(name, str):
        raise ValidationError("missing 'name'")
    name = name.strip()
    if not name:
        raise ValidationError("empty 'name'")

    raw_aliases = raw.get("aliases", [])
    if not isinstance(raw_aliases, list) or any(not isinstance(a, str) for a in raw_aliases):
        raise ValidationError("'aliases' must be a list of strings")
    aliases: list[str] = []
    seen: set[str] = set()
    for alias in raw_aliases:
        alias = alias.strip()
        if not alias or alias.lower() in seen:
            continue
        seen.add(alias.lower())
        aliases.append(alias)

    definition = raw.get("definition")
    if definition is not None and not isinstance(definition, str):
        raise ValidationError("'definition' must be a string")
    if definition is not None:
        definition = definition.strip() or None

    raw_contexts = raw.get("contexts", [])
    if not isinstance(raw_contexts, list) or any(not isinstance(c, str) for c in raw_contexts):
        raise ValidationError("'contexts' must be a list of strings")
    contexts = tuple(c.strip() for c in raw_contexts if c.strip())
    if len(contexts) > MAX_CONTEXTS:
        raise ValidationError(f"more than {MAX_CONTEXTS} contexts ({len(contexts)})")

    origin = DefinitionOrigin.NATIVE if definition is not None else DefinitionOrigin.NONE
    return Entity(
        id=entity_id.strip(),
        name=name,
        aliases=tuple(aliases),
        definition=definition,
        contexts=contexts,
        definition_source=origin,
    )


def _iter_text_lines(stream: IO) -> Iterator[str]:
    for line in stream:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        yield line


def parse_kb_file(stream: IO) -> Ontology:
    """Parse a JSON-lines KB stream into an Ontology.

    Blank lines are skipped; entity order follows file order. Raises
    KbParseError with the 1-based line number on malformed lines,
    DuplicateIdError on repeated ids.
    """
    entities: list[Entity] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(_iter_text_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise KbParseError(f"malformed JSON: {exc.msg}", line=lineno) from exc
        try:
            entity = validate_entity(raw)
        except DuplicateIdError:
            raise
        except ValidationError as exc:
            raise KbParseError(str(exc), line=lineno) from exc
        if entity.id in seen_ids:
            raise DuplicateIdError(entity.id)
        seen_ids.add(entity.id)
        entities.append(entity)
    return Ontology.from_entities(entities)


def write_kb_file(ontology: Ontology, stream: IO[str]) -> None:
    """Write an ontology back to the JSON-lines KB format.

    Only the five schema keys are emitted; definition provenance is not
    persisted (externally sourced definitions reload as native).
    """
    for entity in ontology:
        obj: dict = {"id": entity.id, "name": entity.name}
        if entity.aliases:
            obj["aliases"] = list(entity.aliases)
        if entity.definition is not None:
            obj["definition"] = entity.definition
        if entity.contexts:
            obj["contexts"] = list(entity.contexts)
        stream.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_kb(path) -> Ontology:
    with open(path, "rb") as fh:
        return parse_kb_file(fh)


def save_kb(ontology: Ontology, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_kb_file(ontology, fh)


def write_alignment(alignments: Iterable[Alignment], stream: IO[str]) -> None:
    """Write alignments as TSV sorted by (source_id, score desc, target_id).

    Scores are rendered with 4 decimal digits (round-half-even), which makes
    the writer/reader pair round-trip bit-exactly.
    """
    rows = sorted(alignments, key=lambda a: (a.source_id, -a.score, a.target_id))
    for a in rows:
        stream.write(f"{a.source_id}\t{a.target_id}\t{a.score:.4f}\t{a.provenance}\n")


def read_alignment(stream: IO) -> list[Alignment]:
    alignments = []
    for lineno, line in enumerate(_iter_text_lines(stream), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 4:
            raise KbParseError(f"expected 4 TSV columns, got {len(parts)}", line=lineno)
        source_id, target_id, score_text, provenance = parts
        try:
            score = float(score_text)
        except ValueError as exc:
            raise KbParseError(f"bad score {score_text!r}", line=lineno) from exc
        try:
            alignments.append(Alignment(source_id, target_id, score, provenance))
        except ValidationError as exc:
            raise KbParseError(str(exc), line=lineno) from exc
    return alignments


def save_alignment(alignments: Iterable[Alignment], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_alignment(alignments, fh)


def load_alignment(path) -> list[Alignment]:
    with open(path, "rb") as fh:
        return read_alignment(fh)


def read_reference(stream: IO) -> ReferenceAlignment:
    labels: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(_iter_text_lines(stream), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise KbParseError(f"expected 3 TSV columns, got {len(parts)}", line=lineno)
        source_id, target_id, label_text = parts
        if label_text not in ("0", "1"):
            raise KbParseError(f"label must be 0 or 1, got {label_text!r}", line=lineno)
        labels[(source_id, target_id)] = int(label_text)
    return ReferenceAlignment(labels=labels)


def write_reference(reference: ReferenceAlignment, stream: IO[str]) -> None:
    for (source_id, target_id), label in sorted(reference.labels.items()):
        stream.write(f"{source_id}\t{target_id}\t{label}\n")


def load_reference(path) -> ReferenceAlignment:
    with open(path, "rb") as fh:
        return read_reference(fh)


def dumps_kb(ontology: Ontology) -> str:
    buf = io.StringIO()
    write_kb_file(ontology, buf)
    return buf.getvalue()
