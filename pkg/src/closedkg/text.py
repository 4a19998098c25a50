"""Tokenization and label normalization shared by ingestion, stats and sampling."""

import unicodedata

__all__ = ["normalize_label", "tokenize"]

# CJK Unified Ideographs plus Extension A; enough to cover the ideographs
# that appear in domain corpora without pulling in a segmenter.
_CJK_RANGES = ((0x4E00, 0x9FFF), (0x3400, 0x4DBF), (0xF900, 0xFAFF))


def _is_cjk(ch):
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def normalize_label(label):
    """Trim whitespace and apply NFC normalization so labels join across files."""
    return unicodedata.normalize("NFC", label.strip())


def tokenize(text):
    """Split text into tokens: whitespace-delimited words, CJK chars one by one.

    A whitespace-delimited chunk that mixes scripts is split so that each CJK
    ideograph becomes its own token while contiguous non-CJK characters stay
    together, e.g. ``"阿司匹林works"`` -> ``["阿", "司", "匹", "林", "works"]``.
    """
    tokens = []
    for chunk in text.split():
        run = []
        for ch in chunk:
            if _is_cjk(ch):
                if run:
                    tokens.append("".join(run))
                    run = []
                tokens.append(ch)
            else:
                run.append(ch)
        if run:
            tokens.append("".join(run))
    return tokens
