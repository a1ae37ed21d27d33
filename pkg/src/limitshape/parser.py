"""Parser that turns config tokens into a syntax tree."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from . import syntax
from .errors import ConfigParseError
from .lexer import Lexer
from .token import Token, TokenType


#recursive descent over the token list; the list always ends with EOF
@dataclass(slots=True)
class Parser:
    tokens: List[Token]
    _pos: int = field(init=False, default=0)

    def parse(self) -> syntax.Document:
        sections: List[syntax.Section] = []
        self._skip_newlines()
        while not self._at(TokenType.EOF):
            if not self._at(TokenType.LEFT_BRACKET):
                raise ConfigParseError("expected section header like '[solver]'", self._peek().span)
            sections.append(self._section())
            self._skip_newlines()
        span = self.tokens[-1].span if not sections else sections[0].span.merge(sections[-1].span)
        return syntax.Document(span=span, sections=sections)

    #parses a lone value terminated by EOF (used by command-line overrides)
    def parse_value(self) -> syntax.Value:
        value = self._value()
        if not self._at(TokenType.EOF):
            raise ConfigParseError("unexpected trailing input after value", self._peek().span)
        return value

    # Sections ------------------------------------------------------------------

    def _section(self) -> syntax.Section:
        opening = self._next()
        name = self._expect(TokenType.WORD, "expected section name")
        closing = self._expect(TokenType.RIGHT_BRACKET, "expected ']' after section name")
        self._end_of_line("expected newline after section header")
        entries: List[syntax.Entry] = []
        self._skip_newlines()
        while self._at(TokenType.WORD):
            entries.append(self._entry())
            self._skip_newlines()
        span = opening.span.merge(entries[-1].span if entries else closing.span)
        return syntax.Section(span=span, name=name.lexeme, name_span=name.span, entries=entries)

    #`key = value` followed by a newline or EOF
    def _entry(self) -> syntax.Entry:
        key = self._next()
        self._expect(TokenType.EQUAL, f"expected '=' after key '{key.lexeme}'")
        value = self._value()
        self._end_of_line(f"expected newline after value of '{key.lexeme}'")
        return syntax.Entry(span=key.span.merge(value.span), key=key.lexeme, key_span=key.span, value=value)

    # Values ---------------------------------------------------------------------

    def _value(self) -> syntax.Value:
        items: List[syntax.Item] = [self._item()]
        while self._accept(TokenType.COMMA):
            items.append(self._item())
        if len(items) == 1:
            return items[0]
        return syntax.ListValue(span=items[0].span.merge(items[-1].span), items=items)

    #adjacent atoms without commas form a phrase
    def _item(self) -> syntax.Item:
        atoms: List[syntax.Atom] = [self._atom()]
        while self._peek().starts_atom:
            atoms.append(self._atom())
        if len(atoms) == 1:
            return atoms[0]
        return syntax.Phrase(span=atoms[0].span.merge(atoms[-1].span), atoms=atoms)

    def _atom(self) -> syntax.Atom:
        token = self._peek()
        if token.type is TokenType.NUMBER:
            return syntax.Number(span=self._next().span, value=token.literal)
        if token.type is TokenType.WORD:
            return syntax.Word(span=self._next().span, text=token.lexeme)
        if token.type is TokenType.STRING:
            return syntax.String(span=self._next().span, text=token.literal)
        if token.type is TokenType.LEFT_PAREN:
            return self._vector(self._next())
        raise ConfigParseError("expected value", token.span)

    def _vector(self, opening: Token) -> syntax.Vector:
        components = [float(self._expect(TokenType.NUMBER, "expected number inside '( )'").literal)]
        while self._accept(TokenType.COMMA):
            components.append(float(self._expect(TokenType.NUMBER, "expected number inside '( )'").literal))
        closing = self._expect(TokenType.RIGHT_PAREN, "expected ')' after vector components")
        return syntax.Vector(span=opening.span.merge(closing.span), components=tuple(components))

    # Cursor -----------------------------------------------------------------------

    def _peek(self) -> Token:
        return self.tokens[self._pos]

    def _at(self, kind: TokenType) -> bool:
        return self._peek().type is kind

    #returns the current token and steps past it; EOF is never stepped past
    def _next(self) -> Token:
        token = self._peek()
        if token.type is not TokenType.EOF:
            self._pos += 1
        return token

    def _accept(self, kind: TokenType) -> Optional[Token]:
        return self._next() if self._at(kind) else None

    def _expect(self, kind: TokenType, message: str) -> Token:
        if not self._at(kind):
            raise ConfigParseError(message, self._peek().span)
        return self._next()

    def _end_of_line(self, message: str) -> None:
        if not self._at(TokenType.EOF):
            self._expect(TokenType.NEWLINE, message)

    def _skip_newlines(self) -> None:
        while self._accept(TokenType.NEWLINE):
            pass


def parse_document(source: str) -> syntax.Document:
    return Parser(Lexer(source).lex()).parse()


def parse_value_text(source: str) -> syntax.Value:
    tokens = [t for t in Lexer(source).lex() if t.type is not TokenType.NEWLINE]
    return Parser(tokens).parse_value()


#splits `section.key=value` and parses the value with the config grammar
def parse_override(text: str) -> Tuple[str, str, syntax.Value]:
    target, sep, raw_value = text.partition("=")
    if not sep:
        raise ConfigParseError(f"override '{text}' must look like section.key=value")
    section, dot, key = target.strip().partition(".")
    if not dot or not section or not key:
        raise ConfigParseError(f"override target '{target.strip()}' must look like section.key")
    return section, key, parse_value_text(raw_value.strip())


__all__ = ["Parser", "parse_document", "parse_override", "parse_value_text"]
