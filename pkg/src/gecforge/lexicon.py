"""Morphology lexicon: noun number pairs, verb paradigms and prepositions.

Regular inflection rules fill in whatever the source tables leave out; an
explicit table entry always wins over a rule.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, NamedTuple

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
PREP, NOUN, VERB, OTHER = "PREP", "NOUN", "VERB", "OTHER"
DEFAULT_PRIORITY = (VERB, NOUN, PREP)
VERB_SLOTS = ("base", "3sg", "past", "past_participle", "gerund")

_VOWELS = set("aeiou")


class Inflection(NamedTuple):
    token: str
    supported: bool


# ---------------------------------------------------------------------------
# regular rules


def _sibilant(word: str) -> bool:
    return word.endswith(("s", "x", "z", "ch", "sh"))


def _consonant_y(word: str) -> bool:
    return len(word) > 1 and word.endswith("y") and word[-2] not in _VOWELS


def pluralize(word: str) -> str:
    if _sibilant(word):
        return word + "es"
    if _consonant_y(word):
        return word[:-1] + "ies"
    return word + "s"


def singularize(word: str) -> str:
    if word.endswith("ies") and len(word) > 3:
        return word[:-3] + "y"
    if word.endswith(("sses", "shes", "ches", "xes", "zes")):
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


def _doubles_final(word: str) -> bool:
    # one-syllable consonant-vowel-consonant words: stop -> stopped
    if len(word) < 3 or word[-1] in _VOWELS or word[-1] in "wxy":
        return False
    if word[-2] not in _VOWELS or word[-3] in _VOWELS:
        return False
    return len(re.findall(r"[aeiou]+", word)) == 1


def third_person(base: str) -> str:
    if _sibilant(base) or base.endswith("o"):
        return base + "es"
    if _consonant_y(base):
        return base[:-1] + "ies"
    return base + "s"


def past_tense(base: str) -> str:
    if base.endswith("e"):
        return base + "d"
    if _consonant_y(base):
        return base[:-1] + "ied"
    if _doubles_final(base):
        return base + base[-1] + "ed"
    return base + "ed"


def gerund(base: str) -> str:
    if base.endswith("ie"):
        return base[:-2] + "ying"
    if base.endswith("e") and not base.endswith(("ee", "ye", "oe")) and len(base) > 2:
        return base[:-1] + "ing"
    if _doubles_final(base):
        return base + base[-1] + "ing"
    return base + "ing"


def regular_paradigm(base: str) -> dict[str, str]:
    past = past_tense(base)
    return {
        "base": base,
        "3sg": third_person(base),
        "past": past,
        "past_participle": past,
        "gerund": gerund(base),
    }


def restore_case(template: str, word: str) -> str:
    """Copy the capitalisation pattern of ``template`` onto ``word``."""
    if template.isupper() and len(template) > 1:
        return word.upper()
    if template[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


# ---------------------------------------------------------------------------
# lexicon


@dataclass(frozen=True)
class MorphLexicon:
    """Read-only lexicon.

    ``noun_plurals`` maps singular to plural; the derived ``noun_pairs`` maps
    each number form to the other.
    """

    noun_plurals: dict[str, str]
    verb_forms: dict[str, dict[str, str]]
    prepositions: frozenset[str]
    priority: tuple[str, ...] = DEFAULT_PRIORITY
    noun_pairs: dict[str, str] = field(init=False, repr=False)
    verb_lemmas: dict[str, tuple[str, ...]] = field(init=False, repr=False)
    token_types: dict[str, str] = field(init=False, repr=False)

    def __post_init__(self):
        if "" not in self.prepositions:
            object.__setattr__(self, "prepositions", frozenset(self.prepositions) | {""})
        if sorted(self.priority) != sorted(DEFAULT_PRIORITY):
            raise ValueError(f"priority must order {DEFAULT_PRIORITY}, got {self.priority}")
        pairs: dict[str, str] = {}
        for sg, pl in self.noun_plurals.items():
            if sg == pl or sg in pairs or pl in pairs:
                raise ValueError(f"noun pair {sg!r}/{pl!r} breaks the singular/plural bijection")
            pairs[sg], pairs[pl] = pl, sg
        object.__setattr__(self, "noun_pairs", pairs)
        lemmas: dict[str, list[str]] = {}
        for lemma, forms in self.verb_forms.items():
            if forms.get("base") != lemma:
                raise ValueError(f"verb {lemma!r} has base form {forms.get('base')!r}")
            for form in forms.values():
                lemmas.setdefault(form, [])
                if lemma not in lemmas[form]:
                    lemmas[form].append(lemma)
        # a word's own lemma first, then alphabetical
        verb_lemmas = {f: tuple(sorted(ls, key=lambda l, f=f: (l != f, l))) for f, ls in lemmas.items()}
        object.__setattr__(self, "verb_lemmas", verb_lemmas)
        classes = {VERB: set(verb_lemmas), NOUN: set(self.noun_pairs), PREP: self.prepositions - {""}}
        types: dict[str, str] = {}
        for kind in reversed(self.priority):
            for w in classes[kind]:
                types[w] = kind
        object.__setattr__(self, "token_types", types)

    # -- queries -----------------------------------------------------------

    @property
    def known_words(self) -> set[str]:
        return set(self.token_types)

    def token_type(self, token: str) -> str:
        return self.token_types.get(token.lower(), OTHER)

    def inflect_noun(self, token: str) -> Inflection:
        """Toggle grammatical number; unsupported tokens come back unchanged."""
        other = self.noun_pairs.get(token.lower())
        if other is None:
            return Inflection(token, False)
        return Inflection(restore_case(token, other), True)

    def inflect_verb(self, token: str, form: str) -> Inflection:
        if form not in VERB_SLOTS:
            raise ValueError(f"unknown verb form {form!r}")
        lemmas = self.verb_lemmas.get(token.lower())
        if not lemmas:
            return Inflection(token, False)
        return Inflection(restore_case(token, self.verb_forms[lemmas[0]][form]), True)

    def verb_alternatives(self, token: str) -> list[str]:
        """Other distinct forms of the token's lemma, sorted, case restored."""
        low = token.lower()
        lemmas = self.verb_lemmas.get(low)
        if not lemmas:
            return []
        forms = set(self.verb_forms[lemmas[0]].values()) - {low}
        return [restore_case(token, f) for f in sorted(forms)]

    def paradigm(self, token: str) -> set[str]:
        lemmas = self.verb_lemmas.get(token.lower(), ())
        return set(self.verb_forms[lemmas[0]].values()) if lemmas else set()

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "nouns": [[sg, pl] for sg, pl in sorted(self.noun_plurals.items())],
            "verbs": [[self.verb_forms[l][s] for s in VERB_SLOTS] for l in sorted(self.verb_forms)],
            "prepositions": sorted(self.prepositions),
            "priority": list(self.priority),
        }

    @classmethod
    def from_json(cls, data: dict) -> "MorphLexicon":
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise ValueError(f"lexicon format_version {version!r}, expected {FORMAT_VERSION}")
        plurals = {sg: pl for sg, pl in data["nouns"]}
        verbs = {row[0]: dict(zip(VERB_SLOTS, row)) for row in data["verbs"]}
        return cls(plurals, verbs, frozenset(data["prepositions"]), tuple(data.get("priority", DEFAULT_PRIORITY)))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MorphLexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _table_rows(lines: Iterable[str]) -> Iterable[list[str]]:
    for line in lines:
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        yield [c.strip().lower() for c in line.split("\t")]


def build_lexicon(
    noun_lines: Iterable[str],
    verb_lines: Iterable[str],
    preposition_lines: Iterable[str],
    priority: tuple[str, ...] = DEFAULT_PRIORITY,
) -> MorphLexicon:
    """Compile TSV sources into a lexicon.

    Noun rows are ``singular[<TAB>plural]`` and verb rows are
    ``base[<TAB>3sg<TAB>past<TAB>past_participle<TAB>gerund]``; missing columns
    are produced by the regular rules.  Noun rows that would break the
    singular/plural bijection are skipped with a warning.
    """
    plurals: dict[str, str] = {}
    used: set[str] = set()
    for row in _table_rows(noun_lines):
        sg = row[0]
        pl = row[1] if len(row) > 1 and row[1] else pluralize(sg)
        if sg == pl or sg in used or pl in used:
            log.warning("skipping noun row %s/%s: conflicts with an earlier entry", sg, pl)
            continue
        plurals[sg] = pl
        used.update((sg, pl))
    verbs: dict[str, dict[str, str]] = {}
    for row in _table_rows(verb_lines):
        base = row[0]
        if len(row) == 1:
            verbs[base] = regular_paradigm(base)
        elif len(row) == len(VERB_SLOTS):
            verbs[base] = dict(zip(VERB_SLOTS, row))
        else:
            raise ValueError(f"verb row for {base!r} needs 1 or {len(VERB_SLOTS)} columns")
    preps = {line.strip().lower() for line in preposition_lines if not line.startswith("#")}
    preps.add("")
    return MorphLexicon(plurals, verbs, frozenset(preps), priority)


def _data_lines(name: str) -> list[str]:
    return resources.files("gecforge").joinpath("data").joinpath(name).read_text(encoding="utf-8").splitlines()


def default_lexicon(priority: tuple[str, ...] = DEFAULT_PRIORITY) -> MorphLexicon:
    """The lexicon compiled from the tables shipped with the package."""
    return build_lexicon(
        _data_lines("nouns.tsv"), _data_lines("verbs.tsv"), _data_lines("prepositions.txt"), priority
    )
