from closedkg.text import normalize_label, tokenize


def test_normalize_label_trims_and_composes():
    assert normalize_label("  aspirin \n") == "aspirin"
    # NFC: combining acute accent merges with the base character.
    assert normalize_label("café") == "café"
    assert normalize_label("") == ""


def test_tokenize_whitespace_words():
    assert tokenize("chest pain and fever") == ["chest", "pain", "and", "fever"]
    assert tokenize("  lots   of \t spaces \n") == ["lots", "of", "spaces"]
    assert tokenize("") == []


def test_tokenize_cjk_chars_split_individually():
    assert tokenize("阿司匹林") == ["阿", "司", "匹", "林"]


def test_tokenize_mixed_script_chunk():
    assert tokenize("阿司匹林works") == ["阿", "司", "匹", "林", "works"]
    assert tokenize("abc阿def") == ["abc", "阿", "def"]


def test_tokenize_keeps_punctuation_attached():
    # No punctuation stripping: tokens are exactly the whitespace/CJK split.
    assert tokenize("fever, cough") == ["fever,", "cough"]
