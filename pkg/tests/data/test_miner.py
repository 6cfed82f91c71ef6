"""
Tests for the (docstring, code) pair miner.
"""

import json
import logging
from pathlib import Path

import pytest

from embedlab.data import MinedPair, MiningStats, mine_code_pairs
from embedlab.data.miner import clean_doc_comment, mine_javascript, mine_python
from embedlab.errors import MiningError

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"


class TestGoldenCorpus:
    """Snapshot of the pairs mined from the fixture corpus."""

    def test_matches_snapshot(self):
        """Test every pair, in order, matches the stored records exactly."""
        expected = json.loads((FIXTURES / "corpus_pairs.json").read_text(encoding="utf-8"))
        mined = [pair.to_record() for pair in mine_code_pairs([CORPUS])]
        assert len(mined) == 23
        assert mined == expected

    def test_stats(self):
        """Test ten files scanned, none skipped, 23 pairs."""
        stats = MiningStats()
        list(mine_code_pairs([CORPUS], stats))
        assert stats == MiningStats(files_scanned=10, files_skipped=0, pairs_emitted=23)

    def test_single_file_keeps_its_path(self):
        """Test a file argument is reported by its own path."""
        pairs = list(mine_code_pairs([CORPUS / "text" / "tokens.py"]))
        assert [p.name for p in pairs] == ["split_words", "count_tokens"]
        assert pairs[0].source_path.endswith("text/tokens.py")


class TestMinePython:
    """Tests for the Python miner."""

    def test_docstring_removed(self):
        """Test the code keeps the signature and body but not the docstring."""
        source = 'def f(x):\n    """Double x."""\n    return 2 * x\n'
        (pair,) = mine_python(source, "m.py")
        assert pair.docstring == "Double x."
        assert pair.code == "def f(x):\n    return 2 * x"
        assert pair.pair_id == "m.py:1:f"

    def test_skips_methods_and_undocumented(self):
        """Test only top-level documented functions count."""
        source = 'class A:\n    def m(self):\n        """Doc."""\n        return 1\n\n\ndef g():\n    return 2\n'
        assert mine_python(source, "m.py") == []

    def test_syntax_error(self):
        """Test unparseable source raises with the line number."""
        with pytest.raises(MiningError, match="m.py:2"):
            mine_python("x = 1\ndef (:\n", "m.py")


class TestMineJavascript:
    """Tests for the JavaScript scanner."""

    def test_doc_comment_pairs(self):
        """Test a documented declaration becomes a pair."""
        source = "/** Negate b. */\nfunction neg(b) {\n  return !b;\n}\n"
        (pair,) = mine_javascript(source, "m.js")
        assert (pair.docstring, pair.name, pair.line) == ("Negate b.", "neg", 2)
        assert pair.code == "function neg(b) {\n  return !b;\n}"

    def test_braces_in_strings_and_comments(self):
        """Test braces inside literals do not end the body."""
        source = "/** Braces. */\nfunction b() {\n  // }\n  return '}' + \"{\" + `${'}'}`;\n}\n"
        (pair,) = mine_javascript(source, "m.js")
        assert pair.code.endswith("`${'}'}`;\n}")

    def test_unbalanced_braces(self):
        """Test a missing closing brace is reported."""
        with pytest.raises(MiningError, match="m.js"):
            mine_javascript("/** Doc. */\nfunction f() {\n  if (x) {\n}\n", "m.js")

    def test_unterminated_string(self):
        """Test an unterminated string literal is reported."""
        with pytest.raises(MiningError, match="unterminated string"):
            mine_javascript('const s = "open;\n', "m.js")

    def test_clean_doc_comment(self):
        """Test gutters are stripped and tag lines dropped."""
        comment = "/**\n * First line.\n *   indented\n * @param x thing\n * after tag\n */"
        assert clean_doc_comment(comment) == "First line.\n  indented"

    def test_empty_doc_comment(self):
        """Test a doc comment with only tags yields no pair."""
        source = "/**\n * @returns {number}\n */\nfunction f() {\n  return 1;\n}\n"
        assert mine_javascript(source, "m.js") == []


class TestDriver:
    """Tests for directory walking and skipping."""

    def test_bad_files_skipped(self, tmp_path, caplog):
        """Test undecodable and unparseable files are skipped with warnings."""
        (tmp_path / "ok.py").write_text('def f():\n    """Doc."""\n    return 1\n')
        (tmp_path / "broken.py").write_text("def (:\n")
        (tmp_path / "latin.js").write_bytes(b"/** caf\xe9 */\nfunction f() {}\n")
        (tmp_path / "notes.txt").write_text("ignored")
        stats = MiningStats()
        with caplog.at_level(logging.WARNING):
            pairs = list(mine_code_pairs([tmp_path], stats))
        assert [p.source_path for p in pairs] == ["ok.py"]
        assert stats == MiningStats(files_scanned=3, files_skipped=2, pairs_emitted=1)
        assert "broken.py" in caplog.text
        assert "not valid UTF-8" in caplog.text

    def test_missing_path(self, tmp_path):
        """Test a nonexistent source path is an error."""
        with pytest.raises(MiningError, match="not found"):
            list(mine_code_pairs([tmp_path / "nope"]))

    def test_empty_pair_rejected(self):
        """Test MinedPair refuses blank content."""
        with pytest.raises(MiningError, match="empty docstring or code"):
            MinedPair(docstring=" ", code="x", source_path="a.py", language="python", name="f", line=1)
