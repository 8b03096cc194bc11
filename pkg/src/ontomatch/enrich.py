"""External enrichment: definitions from an encyclopedia source, usage
contexts from a mention corpus.

Fixture mode is fully offline: a JSON-lines file of {"query": ..., "lead":
...} objects stands in for the search endpoint, which keeps the test suite
hermetic. Live mode is a thin MediaWiki-style API client with caching,
retries, and rate limiting, configured through the ENRICH_ENDPOINT and
ENRICH_RATE_MS environment variables.

Context corpus file: JSON lines of {"id": entity_id, "contexts": [...]}.
"""

from __future__ import annotations

import json
import logging
import os
import random
import time
from dataclasses import dataclass
from typing import IO

from .errors import KbParseError, ValidationError
from .kb import MAX_CONTEXTS, DefinitionOrigin, Entity, Ontology, _iter_text_lines

logger = logging.getLogger(__name__)

ENDPOINT_ENV = "ENRICH_ENDPOINT"
RATE_ENV = "ENRICH_RATE_MS"

# A period ending one of these is not a sentence boundary.
ABBREVIATIONS = ("e.g.", "i.e.", "etc.", "dr.", "vs.", "approx.")


def first_sentence(text: str) -> str:
    """Prefix of ``text`` up to its first sentence terminator.

    A terminator is '.', '!' or '?' followed by whitespace or end of
    string, except periods inside known abbreviations or between digits.
    Returns the whole text when no terminator qualifies.
    """
    for i, ch in enumerate(text):
        if ch not in ".!?":
            continue
        nxt = text[i + 1] if i + 1 < len(text) else None
        if nxt is not None and not nxt.isspace():
            continue
        if ch == ".":
            if i > 0 and text[i - 1].isdigit() and nxt is not None and nxt.isdigit():
                continue
            prefix = text[: i + 1].lower()
            abbreviated = False
            for abbr in ABBREVIATIONS:
                if prefix.endswith(abbr):
                    before = prefix[: -len(abbr)]
                    if not before or not before[-1].isalpha():
                        abbreviated = True
                        break
            if abbreviated:
                continue
        return text[: i + 1]
    return text


class DefinitionSource:
    """Base lookup with per-query caching of extracted sentences."""

    def __init__(self):
        self.cache: dict[str, str | None] = {}
        self.cache_hits = 0
        self.lookups = 0

    def _lookup(self, query: str) -> str | None:
        raise NotImplementedError

    def fetch(self, name: str) -> str | None:
        """First sentence of the top article for ``name``, or None."""
        if not name:
            raise ValidationError("query name must be non-empty")
        if name in self.cache:
            self.cache_hits += 1
            return self.cache[name]
        self.lookups += 1
        lead = self._lookup(name)
        result = first_sentence(lead.strip()) if lead and lead.strip() else None
        self.cache[name] = result
        return result


class FixtureDefinitionSource(DefinitionSource):
    """Offline source backed by a query -> lead-text mapping."""

    def __init__(self, fixture: dict[str, str]):
        super().__init__()
        self.fixture = dict(fixture)

    def _lookup(self, query: str) -> str | None:
        return self.fixture.get(query)

    @classmethod
    def from_file(cls, path) -> "FixtureDefinitionSource":
        fixture = {}
        with open(path, "rb") as fh:
            for lineno, line in enumerate(_iter_text_lines(fh), start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise KbParseError(f"malformed JSON: {exc.msg}", line=lineno) from exc
                if not isinstance(obj, dict) or "query" not in obj or "lead" not in obj:
                    raise KbParseError("expected keys 'query' and 'lead'", line=lineno)
                fixture[obj["query"]] = obj["lead"]
        return cls(fixture)


class LiveDefinitionSource(DefinitionSource):
    """MediaWiki-style search + extract client, rate limited with retries."""

    def __init__(
        self,
        endpoint: str | None = None,
        rate_ms: float | None = None,
        max_retries: int = 3,
    ):
        super().__init__()
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not self.endpoint:
            raise ValidationError(f"live enrichment requires {ENDPOINT_ENV}")
        if rate_ms is None:
            rate_ms = float(os.environ.get(RATE_ENV, "100"))
        self.min_interval = rate_ms / 1000.0
        self.max_retries = max_retries
        self._last_call = 0.0

    def _throttled_get(self, params: dict):
        import requests

        wait = self._last_call + self.min_interval - time.monotonic()
        if wait > 0:
            time.sleep(wait)
        self._last_call = time.monotonic()
        response = requests.get(self.endpoint, params=params, timeout=10)
        response.raise_for_status()
        return response.json()

    def _get_with_retries(self, params: dict):
        delay = 0.5
        for attempt in range(self.max_retries):
            try:
                return self._throttled_get(params)
            except Exception as exc:  # enrichment is best-effort
                if attempt == self.max_retries - 1:
                    logger.warning("giving up on %r: %s", params.get("srsearch"), exc)
                    return None
                time.sleep(delay)
                delay *= 2
        return None

    def _lookup(self, query: str) -> str | None:
        found = self._get_with_retries(
            {
                "action": "query",
                "list": "search",
                "srsearch": query,
                "srlimit": 1,
                "format": "json",
            }
        )
        try:
            title = found["query"]["search"][0]["title"]
        except (KeyError, IndexError, TypeError):
            return None
        page = self._get_with_retries(
            {
                "action": "query",
                "prop": "extracts",
                "exintro": 1,
                "explaintext": 1,
                "titles": title,
                "format": "json",
            }
        )
        try:
            pages = page["query"]["pages"]
            return next(iter(pages.values()))["extract"]
        except (KeyError, StopIteration, TypeError):
            return None


@dataclass(frozen=True)
class EnrichmentReport:
    native: int
    external: int
    missing: int

    def as_dict(self) -> dict:
        return {"native": self.native, "external": self.external, "none": self.missing}


def enrich_definitions(
    ontology: Ontology, source: DefinitionSource
) -> tuple[Ontology, EnrichmentReport]:
    """Fill missing definitions from ``source``; native ones are kept."""
    native = external = missing = 0
    entities = []
    for entity in ontology:
        if entity.definition_source is DefinitionOrigin.NATIVE:
            native += 1
            entities.append(entity)
            continue
        if entity.definition_source is DefinitionOrigin.EXTERNAL:
            external += 1
            entities.append(entity)
            continue
        fetched = source.fetch(entity.name)
        if fetched is not None:
            external += 1
            entities.append(entity.with_definition(fetched, DefinitionOrigin.EXTERNAL))
        else:
            missing += 1
            entities.append(entity)
    return Ontology.from_entities(entities), EnrichmentReport(native, external, missing)


class ContextCorpus:
    """entity_id -> context sentences, loaded from JSON lines."""

    def __init__(self, contexts: dict[str, list[str]]):
        for entity_id, sentences in contexts.items():
            if any(not s.strip() for s in sentences):
                raise ValidationError(f"empty context sentence for {entity_id!r}")
        self.contexts = contexts

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self.contexts

    def get(self, entity_id: str) -> list[str]:
        return self.contexts.get(entity_id, [])

    @classmethod
    def from_file(cls, path) -> "ContextCorpus":
        contexts: dict[str, list[str]] = {}
        with open(path, "rb") as fh:
            for lineno, line in enumerate(_iter_text_lines(fh), start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise KbParseError(f"malformed JSON: {exc.msg}", line=lineno) from exc
                if not isinstance(obj, dict) or "id" not in obj or "contexts" not in obj:
                    raise KbParseError("expected keys 'id' and 'contexts'", line=lineno)
                contexts.setdefault(obj["id"], []).extend(obj["contexts"])
        return cls(contexts)

    def save(self, stream: IO[str]) -> None:
        for entity_id in sorted(self.contexts):
            stream.write(
                json.dumps({"id": entity_id, "contexts": self.contexts[entity_id]},
                           ensure_ascii=False) + "\n"
            )


def attach_contexts(
    ontology: Ontology,
    corpus: ContextCorpus,
    max_contexts: int = MAX_CONTEXTS,
    seed: int = 0,
) -> Ontology:
    """Attach corpus sentences to entities, sampling down to the cap.

    Sampling is without replacement, preserves corpus order, and is seeded
    per entity id, so runs are reproducible and idempotent regardless of
    entity order.
    """
    entities = []
    for entity in ontology:
        if entity.id not in corpus:
            entities.append(entity)
            continue
        sentences = corpus.get(entity.id)
        if len(sentences) <= max_contexts:
            chosen = list(sentences)
        else:
            rng = random.Random(f"{seed}:{entity.id}")
            picks = sorted(rng.sample(range(len(sentences)), max_contexts))
            chosen = [sentences[i] for i in picks]
        entities.append(entity.with_contexts(chosen))
    return Ontology.from_entities(entities)
