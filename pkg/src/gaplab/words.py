"""Reduced words over a finite symmetric alphabet.

A word is a tuple of letters (i, s) with i the generator index and
s = +1 or -1.  Reduction cancels adjacent inverse pairs only; no other
relations are imposed, so word arithmetic is arithmetic in the free
group on the alphabet.
"""

from __future__ import annotations

from typing import Iterator, Sequence, Tuple

Letter = Tuple[int, int]
WordTuple = Tuple[Letter, ...]

EMPTY: WordTuple = ()


def reduce_word(letters: Sequence[Letter]) -> WordTuple:
    """Freely reduce a letter sequence."""
    out: list[Letter] = []
    for idx, sign in letters:
        if sign not in (1, -1):
            raise ValueError(f"letter sign must be +-1, got {sign}")
        if out and out[-1][0] == idx and out[-1][1] == -sign:
            out.pop()
        else:
            out.append((idx, sign))
    return tuple(out)


def concat(a: WordTuple, b: WordTuple) -> WordTuple:
    """Product of two reduced words, reduced."""
    # only the seam can cancel, so peel matched inverse pairs there
    i = len(a)
    j = 0
    while i > 0 and j < len(b) and a[i - 1][0] == b[j][0] and a[i - 1][1] == -b[j][1]:
        i -= 1
        j += 1
    return a[:i] + b[j:]


def invert(w: WordTuple) -> WordTuple:
    return tuple((idx, -sign) for idx, sign in reversed(w))


def word_length(w: WordTuple) -> int:
    return len(w)


def is_reduced(w: Sequence[Letter]) -> bool:
    return all(
        not (w[t][0] == w[t + 1][0] and w[t][1] == -w[t + 1][1])
        for t in range(len(w) - 1)
    )


def count_reduced_words(k: int, n: int) -> int:
    """Number of reduced words of length exactly n over k free generators."""
    if k < 1:
        raise ValueError("need at least one generator")
    if n < 0:
        raise ValueError("negative length")
    if n == 0:
        return 1
    return 2 * k * (2 * k - 1) ** (n - 1)


def enumerate_reduced_words(
    k: int, n: int, mode: str = "exact", cap: int = 10_000_000
) -> Iterator[WordTuple]:
    """Yield reduced words over k generators, length == n ("exact") or <= n ("upto").

    Depth-first, lexicographic in (index, sign) with +1 before -1.  Raises
    before starting if the count would exceed `cap`.
    """
    if mode not in ("exact", "upto"):
        raise ValueError(f"unknown mode {mode!r}")
    total = (
        count_reduced_words(k, n)
        if mode == "exact"
        else sum(count_reduced_words(k, m) for m in range(n + 1))
    )
    if total > cap:
        raise ResourceCapError(
            f"{total} reduced words requested, cap is {cap}; tighten n or raise cap"
        )
    alphabet = [(i, s) for i in range(k) for s in (1, -1)]

    def rec(prefix: list[Letter]) -> Iterator[WordTuple]:
        if mode == "upto" or len(prefix) == n:
            yield tuple(prefix)
        if len(prefix) == n:
            return
        for idx, sign in alphabet:
            if prefix and prefix[-1][0] == idx and prefix[-1][1] == -sign:
                continue
            prefix.append((idx, sign))
            yield from rec(prefix)
            prefix.pop()

    if mode == "upto":
        yield from rec([])
    else:
        if n == 0:
            yield EMPTY
        else:
            yield from rec([])


class ResourceCapError(RuntimeError):
    """An enumeration or convolution would exceed its configured cap."""
