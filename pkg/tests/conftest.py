import random
import string

import pytest

from thinkanywhere.parser import (CodeSegment, DelimiterScheme, MixedSequence,
                                  ThinkBlock, serialize)

# '<' excluded so generated text can never collide with a delimiter
SAFE_CHARS = string.ascii_letters + string.digits + " \n\t=+-*/().,:[]'\"_>"


def random_text(rng: random.Random, max_len: int = 30) -> str:
    return "".join(rng.choice(SAFE_CHARS)
                   for _ in range(rng.randint(0, max_len)))


def random_valid_sequence(rng: random.Random,
                          max_blocks: int = 6) -> MixedSequence:
    upfront = random_text(rng) if rng.random() < 0.8 else None
    m = rng.randint(0, max_blocks)
    segments = [CodeSegment(random_text(rng))]
    for _ in range(m):
        segments.append(ThinkBlock(random_text(rng)))
        segments.append(CodeSegment(random_text(rng)))
    prefix = ""
    if upfront is not None and rng.random() < 0.2:
        prefix = " " * rng.randint(1, 3)
    return MixedSequence(upfront=upfront, segments=segments, prefix=prefix)


def random_valid_raw(rng: random.Random,
                     scheme: DelimiterScheme = DelimiterScheme()) -> str:
    return serialize(random_valid_sequence(rng), scheme)


@pytest.fixture
def rng():
    return random.Random(20260826)


@pytest.fixture(scope="session")
def shared_sandbox():
    from thinkanywhere.sandbox import Sandbox
    sb = Sandbox(max_workers=4)
    yield sb
    sb.shutdown()
