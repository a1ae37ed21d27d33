"""Lexical analysis for the run-config language."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

from .errors import ConfigLexError, SourceLocation, SourceSpan
from .token import Token, TokenType

_WORD_CHARS = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-/")

_PUNCTUATION = {
    "[": TokenType.LEFT_BRACKET,
    "]": TokenType.RIGHT_BRACKET,
    "(": TokenType.LEFT_PAREN,
    ")": TokenType.RIGHT_PAREN,
    ",": TokenType.COMMA,
    "=": TokenType.EQUAL,
    ".": TokenType.DOT,
    "\n": TokenType.NEWLINE,
}


#turns config text into tokens; newlines are tokens because every entry ends a line
@dataclass(slots=True)
class Lexer:
    source: str
    _pos: int = field(init=False, default=0)
    _line: int = field(init=False, default=1)
    _column: int = field(init=False, default=1)

    def lex(self) -> List[Token]:
        tokens: List[Token] = []
        while True:
            token = self._scan_token()
            if token is None:
                continue
            tokens.append(token)
            if token.type is TokenType.EOF:
                return tokens

    #one token, or None for a comment; blanks before it are skipped
    def _scan_token(self) -> Optional[Token]:
        while self._peek() in (" ", "\t", "\r"):
            self._bump()
        start = self._here()
        if self._pos >= len(self.source):
            return Token(TokenType.EOF, "", SourceSpan(start=start, end=start))
        first = self._bump()
        if first.isalpha() or first == "_":
            return self._scan_word(start)
        if first.isdigit() or (first in "+-." and self._number_follows(first)):
            return self._scan_number(start)
        if first == "#":
            while self._peek() not in ("\n", ""):
                self._bump()
            return None
        if first == '"':
            return self._scan_string(start)
        kind = _PUNCTUATION.get(first)
        if kind is None:
            raise ConfigLexError(f"unexpected character {first!r}", self._span_from(start))
        return Token(kind, first, self._span_from(start))

    # Cursor -------------------------------------------------------------------

    def _here(self) -> SourceLocation:
        return SourceLocation(line=self._line, column=self._column)

    def _span_from(self, start: SourceLocation) -> SourceSpan:
        return SourceSpan(start=start, end=self._here())

    def _peek(self, ahead: int = 0) -> str:
        at = self._pos + ahead
        return self.source[at] if at < len(self.source) else ""

    def _bump(self) -> str:
        char = self.source[self._pos]
        self._pos += 1
        if char == "\n":
            self._line, self._column = self._line + 1, 1
        else:
            self._column += 1
        return char

    # Lexemes ------------------------------------------------------------------

    #a sign or dot opens a number only when a digit follows
    def _number_follows(self, first: str) -> bool:
        if self._peek().isdigit():
            return True
        return first != "." and self._peek() == "." and self._peek(1).isdigit()

    #bare words may contain dashes and slashes; a dot stays inside only before a letter
    def _scan_word(self, start: SourceLocation) -> Token:
        begin = self._pos - 1
        while True:
            char = self._peek()
            if char and char in _WORD_CHARS:
                self._bump()
            elif char == "." and self._peek(1).isalpha():
                self._bump()
            else:
                break
        text = self.source[begin : self._pos]
        return Token(TokenType.WORD, text, self._span_from(start), literal=text)

    def _scan_number(self, start: SourceLocation) -> Token:
        begin = self._pos - 1
        while self._peek().isdigit() or self._peek() == ".":
            self._bump()
        exponent_digit = self._peek(2) if self._peek(1) in ("+", "-") else self._peek(1)
        if self._peek() in ("e", "E") and exponent_digit.isdigit():
            self._bump()
            if self._peek() in ("+", "-"):
                self._bump()
            while self._peek().isdigit():
                self._bump()
        text = self.source[begin : self._pos]
        span = self._span_from(start)
        try:
            value = int(text) if text.lstrip("+-").isdigit() else float(text)
        except ValueError:
            raise ConfigLexError(f"malformed number {text!r}", span) from None
        return Token(TokenType.NUMBER, text, span, literal=value)

    #double-quoted text on one line, no escapes
    def _scan_string(self, start: SourceLocation) -> Token:
        begin = self._pos
        while self._peek() not in ('"', "\n", ""):
            self._bump()
        if self._peek() != '"':
            raise ConfigLexError("unterminated string", self._span_from(start))
        text = self.source[begin : self._pos]
        self._bump()
        return Token(TokenType.STRING, f'"{text}"', self._span_from(start), literal=text)
