"""Tokenizer, AST, parser, and renderer for the supported SQL subset.

Supported statements:

    SELECT [DISTINCT] * | col, ...  FROM t [, t | INNER JOIN t ON a = b]*
        [WHERE expr] [;]
    DELETE FROM t [WHERE expr] [;]
    INSERT INTO t (col, ...) VALUES (literal, ...) [;]

where expr combines comparisons (=, !=, <>, <, >, <=, >=) over column
references and quoted/numeric literals with AND/OR and parentheses.
Keywords are case-insensitive; identifiers keep their case and their
backtick quoting, so rendering reproduces the input's style. Anything
recognizably SQL but outside the subset (GROUP BY, subqueries, UPDATE, ...)
raises UnsupportedSqlError; everything else is a syntax error carrying a
byte offset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import SqlSyntaxError, UnsupportedSqlError

_KEYWORDS = {
    "select", "distinct", "from", "where", "and", "or", "inner", "join",
    "on", "delete", "insert", "into", "values",
}
_UNSUPPORTED_KEYWORDS = {
    "group", "order", "limit", "having", "union", "update", "set", "like",
    "in", "between", "not", "is", "null", "left", "right", "outer", "cross",
    "as", "exists", "create", "drop", "alter", "show", "load", "replace",
}
_OPERATORS = ("<=", ">=", "!=", "<>", "=", "<", ">")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT QIDENT STRING NUMBER OP PUNCT EOF
    text: str
    pos: int  # character offset into the statement


def _byte_offset(sql: str, pos: int) -> int:
    return len(sql[:pos].encode("utf-8"))


def tokenize(sql: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(sql)
    while i < n:
        c = sql[i]
        if c.isspace():
            i += 1
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (sql[j].isalnum() or sql[j] in "_$"):
                j += 1
            tokens.append(Token("IDENT", sql[i:j], i))
            i = j
            continue
        if c.isdigit():
            j = i + 1
            while j < n and sql[j].isdigit():
                j += 1
            if j < n and sql[j] == "." and j + 1 < n and sql[j + 1].isdigit():
                j += 1
                while j < n and sql[j].isdigit():
                    j += 1
            tokens.append(Token("NUMBER", sql[i:j], i))
            i = j
            continue
        if c == "`":
            j = i + 1
            name = []
            while True:
                if j >= n:
                    raise SqlSyntaxError("unterminated backtick identifier", _byte_offset(sql, i))
                if sql[j] == "`":
                    if j + 1 < n and sql[j + 1] == "`":
                        name.append("`")
                        j += 2
                        continue
                    break
                name.append(sql[j])
                j += 1
            tokens.append(Token("QIDENT", "".join(name), i))
            i = j + 1
            continue
        if c == "'":
            j = i + 1
            body = []
            while True:
                if j >= n:
                    raise SqlSyntaxError("unterminated string literal", _byte_offset(sql, i))
                if sql[j] == "'":
                    if j + 1 < n and sql[j + 1] == "'":
                        body.append("'")
                        j += 2
                        continue
                    break
                body.append(sql[j])
                j += 1
            tokens.append(Token("STRING", "".join(body), i))
            i = j + 1
            continue
        matched = False
        for op in _OPERATORS:
            if sql.startswith(op, i):
                tokens.append(Token("OP", op, i))
                i += len(op)
                matched = True
                break
        if matched:
            continue
        if c in ",().;*":
            tokens.append(Token("PUNCT", c, i))
            i += 1
            continue
        raise SqlSyntaxError(f"unexpected character {c!r}", _byte_offset(sql, i))
    tokens.append(Token("EOF", "", n))
    return tokens


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Ident:
    name: str
    quoted: bool = False

    def render(self) -> str:
        if self.quoted:
            return "`" + self.name.replace("`", "``") + "`"
        return self.name


@dataclass(frozen=True)
class ColumnRef:
    column: Ident
    table: Ident | None = None

    def render(self) -> str:
        if self.table is not None:
            return f"{self.table.render()}.{self.column.render()}"
        return self.column.render()

    @property
    def display(self) -> str:
        """Qualifier-dot-name without quoting; how result columns are named."""
        if self.table is not None:
            return f"{self.table.name}.{self.column.name}"
        return self.column.name


@dataclass(frozen=True)
class Literal:
    text: str
    quoted: bool

    def render(self) -> str:
        if self.quoted:
            return "'" + self.text.replace("'", "''") + "'"
        return self.text


Operand = Union[ColumnRef, Literal]


@dataclass(frozen=True)
class Comparison:
    left: Operand
    op: str
    right: Operand


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Paren:
    inner: "Expr"


Expr = Union[Comparison, And, Or, Paren]


@dataclass(frozen=True)
class TableRef:
    name: Ident


@dataclass(frozen=True)
class Join:
    table: TableRef
    left: ColumnRef
    right: ColumnRef


@dataclass(frozen=True)
class SelectQuery:
    star: bool
    items: tuple[ColumnRef, ...]
    from_items: tuple[Union[TableRef, Join], ...]
    where: Expr | None
    distinct: bool = False
    semicolon: bool = True

    kind = "SELECT"

    @property
    def tables(self) -> tuple[TableRef, ...]:
        out = []
        for item in self.from_items:
            out.append(item.table if isinstance(item, Join) else item)
        return tuple(out)


@dataclass(frozen=True)
class DeleteQuery:
    table: TableRef
    where: Expr | None
    semicolon: bool = True

    kind = "DELETE"


@dataclass(frozen=True)
class InsertQuery:
    table: TableRef
    columns: tuple[Ident, ...]
    values: tuple[Literal, ...]
    semicolon: bool = True

    kind = "INSERT"


ParsedQuery = Union[SelectQuery, DeleteQuery, InsertQuery]


# --- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, sql: str):
        self.sql = sql
        self.tokens = tokenize(sql)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> SqlSyntaxError:
        tok = tok or self.peek()
        return SqlSyntaxError(message, _byte_offset(self.sql, tok.pos))

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.text.lower() == word

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.error(f"expected {word.upper()}")
        return self.advance()

    def expect_punct(self, char: str) -> Token:
        tok = self.peek()
        if tok.kind != "PUNCT" or tok.text != char:
            raise self.error(f"expected {char!r}")
        return self.advance()

    def parse_statement(self) -> ParsedQuery:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.error("expected a statement keyword")
        head = tok.text.lower()
        if head == "select":
            query = self.parse_select()
        elif head == "delete":
            query = self.parse_delete()
        elif head == "insert":
            query = self.parse_insert()
        elif head in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedSqlError(f"{tok.text.upper()} statements are not supported")
        else:
            raise self.error(f"unknown statement keyword {tok.text!r}")
        semicolon = False
        if self.peek().kind == "PUNCT" and self.peek().text == ";":
            self.advance()
            semicolon = True
        self.check_end()
        return _with_semicolon(query, semicolon)

    def check_end(self) -> None:
        tok = self.peek()
        if tok.kind == "EOF":
            return
        if tok.kind == "IDENT" and tok.text.lower() in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedSqlError(
                f"{tok.text.upper()} is not supported in this subset"
            )
        raise self.error("trailing input after statement")

    def parse_identifier(self) -> Ident:
        tok = self.peek()
        if tok.kind == "QIDENT":
            self.advance()
            return Ident(tok.text, quoted=True)
        if tok.kind == "IDENT":
            lowered = tok.text.lower()
            if lowered in _KEYWORDS:
                raise self.error(f"keyword {tok.text!r} used as identifier")
            if lowered in _UNSUPPORTED_KEYWORDS:
                raise UnsupportedSqlError(
                    f"{tok.text.upper()} is not supported in this subset"
                )
            self.advance()
            return Ident(tok.text, quoted=False)
        raise self.error("expected identifier")

    def parse_column_ref(self) -> ColumnRef:
        first = self.parse_identifier()
        if self.peek().kind == "PUNCT" and self.peek().text == ".":
            self.advance()
            second = self.parse_identifier()
            return ColumnRef(second, table=first)
        return ColumnRef(first)

    def parse_select(self) -> SelectQuery:
        self.expect_keyword("select")
        distinct = False
        if self.at_keyword("distinct"):
            self.advance()
            distinct = True
        star = False
        items: list[ColumnRef] = []
        if self.peek().kind == "PUNCT" and self.peek().text == "*":
            self.advance()
            star = True
        else:
            items.append(self.parse_select_item())
            while self.peek().kind == "PUNCT" and self.peek().text == ",":
                self.advance()
                items.append(self.parse_select_item())
        self.expect_keyword("from")
        from_items: list[TableRef | Join] = [TableRef(self.parse_identifier())]
        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.text == ",":
                self.advance()
                from_items.append(TableRef(self.parse_identifier()))
            elif self.at_keyword("inner"):
                self.advance()
                self.expect_keyword("join")
                table = TableRef(self.parse_identifier())
                self.expect_keyword("on")
                left = self.parse_column_ref()
                op = self.peek()
                if op.kind != "OP" or op.text != "=":
                    raise self.error("expected = in join condition")
                self.advance()
                right = self.parse_column_ref()
                from_items.append(Join(table, left, right))
            elif self.at_keyword("join"):
                raise UnsupportedSqlError("only INNER JOIN ... ON is supported")
            else:
                break
        where = None
        if self.at_keyword("where"):
            self.advance()
            where = self.parse_expr()
        return SelectQuery(star, tuple(items), tuple(from_items), where, distinct)

    def parse_select_item(self) -> ColumnRef:
        ref = self.parse_column_ref()
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text == "(":
            raise UnsupportedSqlError("function calls are not supported")
        return ref

    def parse_delete(self) -> DeleteQuery:
        self.expect_keyword("delete")
        self.expect_keyword("from")
        table = TableRef(self.parse_identifier())
        where = None
        if self.at_keyword("where"):
            self.advance()
            where = self.parse_expr()
        return DeleteQuery(table, where)

    def parse_insert(self) -> InsertQuery:
        self.expect_keyword("insert")
        self.expect_keyword("into")
        table = TableRef(self.parse_identifier())
        self.expect_punct("(")
        columns = [self.parse_identifier()]
        while self.peek().kind == "PUNCT" and self.peek().text == ",":
            self.advance()
            columns.append(self.parse_identifier())
        self.expect_punct(")")
        self.expect_keyword("values")
        self.expect_punct("(")
        values = [self.parse_literal()]
        while self.peek().kind == "PUNCT" and self.peek().text == ",":
            self.advance()
            values.append(self.parse_literal())
        self.expect_punct(")")
        if self.peek().kind == "PUNCT" and self.peek().text == ",":
            raise UnsupportedSqlError("multi-row VALUES lists are not supported")
        if len(values) != len(columns):
            raise self.error(
                f"{len(columns)} columns but {len(values)} values", self.peek()
            )
        return InsertQuery(table, tuple(columns), tuple(values))

    def parse_literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == "STRING":
            self.advance()
            return Literal(tok.text, quoted=True)
        if tok.kind == "NUMBER":
            self.advance()
            return Literal(tok.text, quoted=False)
        raise self.error("expected literal value")

    def parse_expr(self) -> Expr:
        left = self.parse_and()
        while self.at_keyword("or"):
            self.advance()
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_primary()
        while self.at_keyword("and"):
            self.advance()
            left = And(left, self.parse_primary())
        return left

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text == "(":
            self.advance()
            if self.at_keyword("select"):
                raise UnsupportedSqlError("subqueries are not supported")
            inner = self.parse_expr()
            self.expect_punct(")")
            return Paren(inner)
        return self.parse_comparison()

    def parse_comparison(self) -> Comparison:
        left = self.parse_operand()
        tok = self.peek()
        if tok.kind == "IDENT" and tok.text.lower() in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedSqlError(
                f"{tok.text.upper()} is not supported in this subset"
            )
        if tok.kind != "OP":
            raise self.error("expected comparison operator")
        self.advance()
        right = self.parse_operand()
        return Comparison(left, tok.text, right)

    def parse_operand(self) -> Operand:
        tok = self.peek()
        if tok.kind in ("STRING", "NUMBER"):
            return self.parse_literal()
        return self.parse_column_ref()


def _with_semicolon(query: ParsedQuery, semicolon: bool) -> ParsedQuery:
    from dataclasses import replace

    return replace(query, semicolon=semicolon)


def parse(sql: str) -> ParsedQuery:
    """Parse one statement of the SQL subset."""
    return _Parser(sql).parse_statement()


# --- renderer --------------------------------------------------------------


def render_expr(expr: Expr) -> str:
    if isinstance(expr, Comparison):
        return f"{_render_operand(expr.left)} {expr.op} {_render_operand(expr.right)}"
    if isinstance(expr, And):
        return f"{render_expr(expr.left)} AND {render_expr(expr.right)}"
    if isinstance(expr, Or):
        return f"{render_expr(expr.left)} OR {render_expr(expr.right)}"
    if isinstance(expr, Paren):
        return f"({render_expr(expr.inner)})"
    raise TypeError(f"not an expression: {expr!r}")


def _render_operand(operand: Operand) -> str:
    return operand.render()


def render_from(from_items) -> str:
    parts = [from_items[0].name.render()]
    for item in from_items[1:]:
        if isinstance(item, Join):
            parts.append(
                f" INNER JOIN {item.table.name.render()} ON "
                f"{item.left.render()} = {item.right.render()}"
            )
        else:
            parts.append(f", {item.name.render()}")
    return "".join(parts)


def render(query: ParsedQuery) -> str:
    """Render a statement with canonical spacing, preserving quoting style."""
    if isinstance(query, SelectQuery):
        head = "SELECT DISTINCT " if query.distinct else "SELECT "
        cols = "*" if query.star else ", ".join(c.render() for c in query.items)
        text = f"{head}{cols} FROM {render_from(query.from_items)}"
        if query.where is not None:
            text += f" WHERE {render_expr(query.where)}"
    elif isinstance(query, DeleteQuery):
        text = f"DELETE FROM {query.table.name.render()}"
        if query.where is not None:
            text += f" WHERE {render_expr(query.where)}"
    elif isinstance(query, InsertQuery):
        cols = ", ".join(c.render() for c in query.columns)
        vals = ", ".join(v.render() for v in query.values)
        text = (
            f"INSERT INTO {query.table.name.render()} ({cols}) VALUES ({vals})"
        )
    else:
        raise TypeError(f"not a statement: {query!r}")
    return text + ";" if query.semicolon else text


def where_columns(expr: Expr | None) -> list[ColumnRef]:
    """Column references in a WHERE tree, first-mention order, deduplicated."""
    out: list[ColumnRef] = []
    seen: set[tuple[str | None, str]] = set()

    def walk(node: Expr) -> None:
        if isinstance(node, Comparison):
            for operand in (node.left, node.right):
                if isinstance(operand, ColumnRef):
                    key = (
                        operand.table.name.lower() if operand.table else None,
                        operand.column.name.lower(),
                    )
                    if key not in seen:
                        seen.add(key)
                        out.append(operand)
        elif isinstance(node, (And, Or)):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Paren):
            walk(node.inner)

    if expr is not None:
        walk(expr)
    return out
