import unicodedata


def nfc(text):
    return unicodedata.normalize("NFC", text)


def is_punct(text):
    """True when every character is punctuation (P*) or a symbol (S*)."""
    return bool(text) and all(unicodedata.category(ch)[0] in "PS" for ch in text)
