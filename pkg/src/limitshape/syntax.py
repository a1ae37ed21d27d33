"""Syntax tree definitions for the run-config language."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple, Union

from .errors import SourceSpan


#notes that every syntax node tracks a span for diagnostics
@dataclass(slots=True)
class Node:
    span: SourceSpan


# Document ---------------------------------------------------------------------


#represents the whole parsed config file
@dataclass(slots=True)
class Document(Node):
    sections: List["Section"] = field(default_factory=list)


#a `[name]` header followed by its entries
@dataclass(slots=True)
class Section(Node):
    name: str
    name_span: SourceSpan
    entries: List["Entry"] = field(default_factory=list)


#one `key = value` line
@dataclass(slots=True)
class Entry(Node):
    key: str
    key_span: SourceSpan
    value: "Value"


# Values -----------------------------------------------------------------------


@dataclass(slots=True)
class Number(Node):
    value: Union[int, float]


@dataclass(slots=True)
class Word(Node):
    text: str


@dataclass(slots=True)
class String(Node):
    text: str


#parenthesised tuple of numbers such as `(0.25, -0.5)`
@dataclass(slots=True)
class Vector(Node):
    components: Tuple[float, ...]


#several atoms side by side, e.g. `hexagon 2 2 2`
@dataclass(slots=True)
class Phrase(Node):
    atoms: List["Atom"] = field(default_factory=list)


#comma-separated values
@dataclass(slots=True)
class ListValue(Node):
    items: List["Item"] = field(default_factory=list)


Atom = Number | Word | String | Vector
Item = Atom | Phrase
Value = Item | ListValue


def describe(value: "Value") -> str:
    match value:
        case Number(value=v):
            return repr(v)
        case Word(text=t):
            return t
        case String(text=t):
            return f'"{t}"'
        case Vector(components=c):
            return "(" + ", ".join(repr(x) for x in c) + ")"
        case Phrase(atoms=atoms):
            return " ".join(describe(a) for a in atoms)
        case ListValue(items=items):
            return ", ".join(describe(i) for i in items)
    raise TypeError(f"not a config value: {value!r}")


__all__ = [
    "Atom",
    "Document",
    "Entry",
    "Item",
    "ListValue",
    "Node",
    "Number",
    "Phrase",
    "Section",
    "String",
    "Value",
    "Vector",
    "Word",
    "describe",
]
