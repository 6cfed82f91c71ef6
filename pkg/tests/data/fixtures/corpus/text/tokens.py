def split_words(text):
    """Split text on whitespace."""
    return text.split()


def count_tokens(text, vocab=None):
    """Count the tokens in text.

    Tokens missing from vocab are still counted.
    """
    words = split_words(text)
    return len(words)
