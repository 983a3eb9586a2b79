"""Shared text normalization and tokenization.

Both the place-name matcher and the classifiers need to agree on what a
"token" is, so both import from here.
"""

from __future__ import annotations

import re
import unicodedata

# Word runs, keeping internal apostrophes: "they're" is one token, trailing
# or leading apostrophes are stripped.
_TOKEN_RE = re.compile(r"\w+(?:'\w+)*")

_WS_RE = re.compile(r"\s+")


def normalize(text: str) -> str:
    """Casefold, strip accents (NFKD, drop combining marks), collapse whitespace.

    Decomposition runs before AND after the casefold: compatibility forms can
    hide case ('𝑨' folds to itself but decomposes to 'A'), and folding can emit
    composed characters in turn.
    """
    folded = unicodedata.normalize("NFKD", text).casefold()
    decomposed = unicodedata.normalize("NFKD", folded)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return _WS_RE.sub(" ", stripped).strip()


def tokenize(text: str) -> list[str]:
    """Normalized tokens in order. Punctuation splits; apostrophes inside a word do not."""
    return _TOKEN_RE.findall(normalize(text))


def token_spans(text: str) -> list[tuple[str, int, int]]:
    """Tokens of the *normalized* text with their (start, end) offsets into it."""
    norm = normalize(text)
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(norm)]
