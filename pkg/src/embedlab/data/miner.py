"""
Mine (docstring, implementation) pairs from source files.

Supported languages:
- Python (.py): parsed with the ast module. Every top-level def/async def
  with a docstring yields a pair; the implementation is the function source
  (decorators included) with the docstring statement removed.
- JavaScript (.js): a lightweight scanner tracks strings, template literals
  and comments to find top-level function declarations immediately preceded
  by a /** ... */ doc comment. The description is the comment text up to the
  first @tag line.

Pairs come out in path order, then source position. Files that cannot be
decoded or parsed are skipped with a warning and counted.
"""

import ast
import logging
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path

from embedlab.errors import MiningError

logger = logging.getLogger(__name__)

LANGUAGES = {".py": "python", ".js": "javascript"}


@dataclass(frozen=True)
class MinedPair:
    """
    One (text, code) pair.

    Attributes:
        docstring: Cleaned documentation text (non-empty)
        code: Function source without its docstring (non-empty)
        source_path: File the pair came from, relative to the mined directory
        language: "python" or "javascript"
        name: Function name
        line: 1-based line of the definition (first decorator for Python)
    """

    docstring: str
    code: str
    source_path: str
    language: str
    name: str
    line: int

    def __post_init__(self) -> None:
        if not self.docstring.strip() or not self.code.strip():
            raise MiningError(f"{self.source_path}:{self.line}: empty docstring or code for {self.name}")

    @property
    def pair_id(self) -> str:
        return f"{self.source_path}:{self.line}:{self.name}"

    def to_record(self) -> dict[str, str]:
        """Training-pair JSONL row: the docstring is x, the code is y."""
        return {"id": self.pair_id, "x": self.docstring, "y": self.code, "language": self.language}


@dataclass
class MiningStats:
    files_scanned: int = 0
    files_skipped: int = 0
    pairs_emitted: int = 0


# ---------------------------------------------------------------------------
# Python
# ---------------------------------------------------------------------------


def _line_starts(source: bytes) -> list[int]:
    starts = [0]
    for line in source.splitlines(keepends=True):
        starts.append(starts[-1] + len(line))
    return starts


def _remove_docstring(source: bytes, starts: list[int], doc: ast.stmt) -> tuple[int, int]:
    """Byte span to cut for the docstring statement: whole lines when it stands alone."""
    begin = starts[doc.lineno - 1] + doc.col_offset
    end = starts[doc.end_lineno - 1] + doc.end_col_offset
    line_begin = starts[doc.lineno - 1]
    line_end = starts[doc.end_lineno]
    before = source[line_begin:begin]
    after = source[end:line_end]
    if not before.strip() and not after.strip():
        return line_begin, line_end
    # inline docstring, e.g. `def f(): "doc"; return 1`
    tail = re.match(rb"\s*;\s*", after)
    return begin, end + (tail.end() if tail else 0)


def mine_python(source: str, source_path: str) -> list[MinedPair]:
    """
    Pairs for the top-level documented functions of one Python file.

    Raises:
        MiningError: If the source does not parse
    """
    try:
        tree = ast.parse(source, filename=source_path)
    except SyntaxError as e:
        raise MiningError(f"{source_path}:{e.lineno}: {e.msg}") from e

    raw = source.encode("utf-8")
    starts = _line_starts(raw)
    pairs: list[MinedPair] = []
    for node in tree.body:
        if not isinstance(node, ast.FunctionDef | ast.AsyncFunctionDef):
            continue
        docstring = ast.get_docstring(node, clean=True)
        if not docstring or not docstring.strip():
            continue
        if len(node.body) == 1:
            logger.debug(f"{source_path}:{node.lineno}: {node.name} has only a docstring; skipping")
            continue
        first_line = node.decorator_list[0].lineno if node.decorator_list else node.lineno
        begin = starts[first_line - 1]
        end = starts[node.end_lineno - 1] + node.end_col_offset
        cut_begin, cut_end = _remove_docstring(raw, starts, node.body[0])
        code = (raw[begin:cut_begin] + raw[cut_end:end]).decode("utf-8").rstrip()
        pairs.append(
            MinedPair(
                docstring=docstring.strip(),
                code=code,
                source_path=source_path,
                language="python",
                name=node.name,
                line=first_line,
            )
        )
    return pairs


# ---------------------------------------------------------------------------
# JavaScript
# ---------------------------------------------------------------------------

_JS_DECL = re.compile(r"(?:export\s+(?:default\s+)?)?(?:async\s+)?function\b\s*\*?\s*([A-Za-z_$][\w$]*)\s*\(")
_IDENT_CHAR = re.compile(r"[\w$]")


class _JsScanner:
    """Skips over JavaScript lexical units; positions are string indices."""

    def __init__(self, source: str, source_path: str) -> None:
        self.src = source
        self.path = source_path

    def fail(self, pos: int, what: str) -> MiningError:
        line = self.src.count("\n", 0, pos) + 1
        return MiningError(f"{self.path}:{line}: {what}")

    def skip_string(self, pos: int) -> int:
        quote = self.src[pos]
        i = pos + 1
        while i < len(self.src):
            c = self.src[i]
            if c == "\\":
                i += 2
                continue
            if c == quote:
                return i + 1
            if c == "\n":
                break
            i += 1
        raise self.fail(pos, "unterminated string literal")

    def skip_block_comment(self, pos: int) -> int:
        end = self.src.find("*/", pos + 2)
        if end < 0:
            raise self.fail(pos, "unterminated block comment")
        return end + 2

    def skip_line_comment(self, pos: int) -> int:
        end = self.src.find("\n", pos)
        return len(self.src) if end < 0 else end + 1

    def skip_template(self, pos: int) -> int:
        i = pos + 1
        while i < len(self.src):
            c = self.src[i]
            if c == "\\":
                i += 2
            elif c == "`":
                return i + 1
            elif self.src.startswith("${", i):
                i = self.skip_balanced(i + 1, "{", "}")
            else:
                i += 1
        raise self.fail(pos, "unterminated template literal")

    def skip_lexeme(self, pos: int) -> int | None:
        """End of the string/comment/template starting at pos, or None if none starts there."""
        c = self.src[pos]
        if c in "'\"":
            return self.skip_string(pos)
        if c == "`":
            return self.skip_template(pos)
        if self.src.startswith("/*", pos):
            return self.skip_block_comment(pos)
        if self.src.startswith("//", pos):
            return self.skip_line_comment(pos)
        return None

    def skip_balanced(self, pos: int, opener: str, closer: str) -> int:
        """pos is at opener; returns the index just past its matching closer."""
        depth = 0
        i = pos
        while i < len(self.src):
            end = self.skip_lexeme(i)
            if end is not None:
                i = end
                continue
            c = self.src[i]
            if c == opener:
                depth += 1
            elif c == closer:
                depth -= 1
                if depth == 0:
                    return i + 1
            i += 1
        raise self.fail(pos, f"unbalanced '{opener}'")

    def find(self, pos: int, char: str) -> int:
        """Index of the next char outside strings and comments."""
        i = pos
        while i < len(self.src):
            end = self.skip_lexeme(i)
            if end is not None:
                i = end
                continue
            if self.src[i] == char:
                return i
            i += 1
        raise self.fail(pos, f"expected '{char}'")


def clean_doc_comment(comment: str) -> str:
    """
    Description text of a /** ... */ comment.

    Leading "*" gutters are removed and everything from the first @tag line
    on is dropped.
    """
    body = comment[3:-2]
    lines: list[str] = []
    for raw in body.splitlines():
        line = raw.strip()
        if line.startswith("*"):
            line = line[1:]
            if line.startswith(" "):
                line = line[1:]
        if line.lstrip().startswith("@"):
            break
        lines.append(line.rstrip())
    return "\n".join(lines).strip()


def mine_javascript(source: str, source_path: str) -> list[MinedPair]:
    """
    Pairs for the top-level documented function declarations of one JS file.

    Regular-expression literals are not recognized; a regex containing a
    quote or brace can confuse the scanner.

    Raises:
        MiningError: On unterminated literals or unbalanced braces
    """
    scanner = _JsScanner(source, source_path)
    pairs: list[MinedPair] = []
    pending_doc: tuple[str, int] | None = None
    depth = 0
    i = 0
    while i < len(source):
        c = source[i]
        if source.startswith("/**", i) and not source.startswith("/**/", i):
            end = scanner.skip_block_comment(i)
            pending_doc = (source[i:end], end) if depth == 0 else None
            i = end
            continue
        end = scanner.skip_lexeme(i)
        if end is not None:
            pending_doc = None
            i = end
            continue
        if c.isspace():
            i += 1
            continue

        at_word_start = i == 0 or not _IDENT_CHAR.match(source[i - 1])
        match = _JS_DECL.match(source, i) if depth == 0 and at_word_start else None
        if match:
            params_end = scanner.skip_balanced(match.end() - 1, "(", ")")
            body_start = scanner.find(params_end, "{")
            body_end = scanner.skip_balanced(body_start, "{", "}")
            if pending_doc is not None:
                docstring = clean_doc_comment(pending_doc[0])
                if docstring:
                    pairs.append(
                        MinedPair(
                            docstring=docstring,
                            code=source[i:body_end],
                            source_path=source_path,
                            language="javascript",
                            name=match.group(1),
                            line=source.count("\n", 0, i) + 1,
                        )
                    )
            pending_doc = None
            i = body_end
            continue

        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth < 0:
                raise scanner.fail(i, "unmatched '}'")
        pending_doc = None
        i += 1

    if depth != 0:
        raise scanner.fail(len(source), "unbalanced braces at end of file")
    return pairs


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

_MINERS = {"python": mine_python, "javascript": mine_javascript}


def _expand(paths: Iterable[Path]) -> list[tuple[Path, str]]:
    """(file, display path) for every supported file, sorted by display path."""
    files: list[tuple[Path, str]] = []
    for path in paths:
        path = Path(path)
        if path.is_dir():
            for f in path.rglob("*"):
                if f.is_file() and f.suffix in LANGUAGES:
                    files.append((f, f.relative_to(path).as_posix()))
        elif path.is_file():
            files.append((path, path.as_posix()))
        else:
            raise MiningError(f"Source path not found: {path}")
    return sorted(files, key=lambda item: item[1])


def mine_code_pairs(paths: Iterable[Path], stats: MiningStats | None = None) -> Iterator[MinedPair]:
    """
    Yield pairs from files and directories (searched recursively).

    Args:
        paths: Files or directories; directory members are reported relative
            to the directory
        stats: Optional counters updated while iterating

    Yields:
        MinedPair in (path, position) order

    Raises:
        MiningError: If a given path does not exist

    Example:
        >>> stats = MiningStats()
        >>> pairs = list(mine_code_pairs([Path("src")], stats))
        >>> stats.files_skipped
        0
    """
    stats = stats if stats is not None else MiningStats()
    for path, display in _expand(paths):
        language = LANGUAGES.get(path.suffix)
        stats.files_scanned += 1
        if language is None:
            logger.warning(f"Skipping {display}: unsupported file type {path.suffix!r}")
            stats.files_skipped += 1
            continue
        try:
            source = path.read_text(encoding="utf-8")
            pairs = _MINERS[language](source, display)
        except UnicodeDecodeError as e:
            logger.warning(f"Skipping {display}: not valid UTF-8 ({e.reason})")
            stats.files_skipped += 1
            continue
        except MiningError as e:
            logger.warning(f"Skipping unparseable file: {e}")
            stats.files_skipped += 1
            continue
        logger.debug(f"{display}: {len(pairs)} pairs")
        for pair in pairs:
            stats.pairs_emitted += 1
            yield pair
