"""Token definitions for the run-config language."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto
from typing import Optional, Union

from .errors import SourceSpan


#lexical categories of config text; NEWLINE is significant because entries end at line ends
class TokenType(Enum):
    LEFT_BRACKET = auto()
    RIGHT_BRACKET = auto()
    LEFT_PAREN = auto()
    RIGHT_PAREN = auto()
    COMMA = auto()
    EQUAL = auto()
    DOT = auto()
    WORD = auto()
    NUMBER = auto()
    STRING = auto()
    NEWLINE = auto()
    EOF = auto()


Literal = Union[int, float, str]


#one lexeme with its source span; NUMBER carries int or float, STRING its unquoted text
@dataclass(frozen=True, slots=True)
class Token:
    type: TokenType
    lexeme: str
    span: SourceSpan
    literal: Optional[Literal] = None

    #true for tokens that can open a value
    @property
    def starts_atom(self) -> bool:
        return self.type in (TokenType.NUMBER, TokenType.WORD, TokenType.STRING, TokenType.LEFT_PAREN)
