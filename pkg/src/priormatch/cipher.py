"""Caesar shift cipher and frequency-matching decryption.

Encryption moves each letter ``shift`` places back in the alphabet (shift 3
maps T to Q). Cracking tries all 26 candidate shifts and keeps the one whose
decrypted letter histogram is closest to a reference histogram.
"""

from __future__ import annotations

import string
from importlib import resources
from pathlib import Path

import numpy as np

from priormatch.errors import InvalidInputError

ALPHABET = string.ascii_uppercase


def shift_encrypt(text: str, shift: int) -> str:
    if not isinstance(shift, (int, np.integer)) or not 0 <= shift <= 25:
        raise InvalidInputError(f"shift must be an integer in 0..25, got {shift!r}")
    upper = ALPHABET[-shift:] + ALPHABET[:-shift] if shift else ALPHABET
    table = str.maketrans(ALPHABET + ALPHABET.lower(), upper + upper.lower())
    return text.translate(table)


def shift_decrypt(text: str, shift: int) -> str:
    if not isinstance(shift, (int, np.integer)) or not 0 <= shift <= 25:
        raise InvalidInputError(f"shift must be an integer in 0..25, got {shift!r}")
    return shift_encrypt(text, (26 - shift) % 26)


def letter_counts(text: str) -> np.ndarray:
    codes = np.frombuffer(text.upper().encode("ascii", "ignore"), dtype=np.uint8)
    codes = codes[(codes >= ord("A")) & (codes <= ord("Z"))] - ord("A")
    return np.bincount(codes, minlength=26).astype(float)


def letter_histogram(text: str) -> np.ndarray:
    """Relative A-Z frequencies, case-folded; all zeros if no letters."""
    counts = letter_counts(text)
    total = counts.sum()
    return counts / total if total else counts


def load_reference(path=None) -> np.ndarray:
    """Read ``LETTER,frequency`` lines; defaults to the bundled English table."""
    if path is None:
        text = resources.files("priormatch").joinpath("data/english_letter_freq.csv").read_text()
    else:
        text = Path(path).read_text()
    ref = np.zeros(26)
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            letter, value = line.split(",")
            idx = ALPHABET.index(letter.strip().upper())
            ref[idx] = float(value)
        except ValueError as exc:
            raise InvalidInputError(f"reference line {lineno}: expected LETTER,frequency") from exc
        seen.add(idx)
    if len(seen) != 26:
        raise InvalidInputError(f"reference must list all 26 letters, got {len(seen)}")
    if np.any(ref < 0) or ref.sum() <= 0:
        raise InvalidInputError("reference frequencies must be non-negative with positive total")
    return ref / ref.sum()


def _chi2(hist: np.ndarray, ref: np.ndarray) -> float:
    mask = ref > 0
    return float(np.sum((hist[mask] - ref[mask]) ** 2 / ref[mask]) + np.sum(hist[~mask]))


def _kl(hist: np.ndarray, ref: np.ndarray, eps: float = 1e-6) -> float:
    # KL(ref || hist); eps keeps letters absent from the sample finite
    mask = ref > 0
    return float(np.sum(ref[mask] * np.log(ref[mask] / (hist[mask] + eps))))


def crack_shift(ciphertext: str, reference=None, metric: str = "chi2") -> tuple[int, np.ndarray]:
    """Most likely shift and the score of every candidate (lower is better).

    Ties go to the smaller shift.
    """
    ref = load_reference() if reference is None else np.asarray(reference, dtype=float)
    if ref.shape != (26,):
        raise InvalidInputError("reference histogram must have 26 entries")
    hist = letter_histogram(ciphertext)
    if not hist.any():
        raise InvalidInputError("ciphertext contains no letters")
    score = {"chi2": _chi2, "kl": _kl}.get(metric)
    if score is None:
        raise InvalidInputError(f"unknown metric {metric!r}; use chi2 or kl")
    # decrypting with shift s moves ciphertext letter c to c + s
    scores = np.array([score(np.roll(hist, s), ref) for s in range(26)])
    return int(np.argmin(scores)), scores
