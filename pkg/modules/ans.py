"""
Stack-based rANS coder (LIFO)

- head: 64-bit register, luôn nằm trong [2^32, 2^64) sau mỗi push/pop
- stack: các word 32-bit, phần tử cuối list là word được push gần nhất
- bảng tần suất lượng tử hoá với tổng 2^16, mỗi symbol có tần suất >= 1

Bảng Bernoulli dùng cho voxel, bảng Gaussian chia bucket đều theo khối lượng
prior dùng cho latent.
"""
import logging
import math
import threading
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import ndtr, ndtri

from modules.errors import CodecError, MessageExhaustedError, NumericError, RejectedInputError

logger = logging.getLogger(__name__)

PRECISION = 16
TOTAL_FREQ = 1 << PRECISION
WORD_BITS = 32
WORD_MASK = (1 << WORD_BITS) - 1
RANS_L = 1 << WORD_BITS             # lower bound of the head interval
HEAD_BITS = 64
HEAD_TOP = 1 << (WORD_BITS - 1)     # forced on the first seeded word
DEFAULT_P_BITS = 12

# Table-construction counters (instrumentation for the no-marginal property)
_counter_lock = threading.Lock()
_TABLE_COUNTERS: Counter = Counter()


def _count(kind: str, n: int = 1) -> None:
    with _counter_lock:
        _TABLE_COUNTERS[kind] += n


def table_counters() -> Dict[str, int]:
    with _counter_lock:
        return dict(_TABLE_COUNTERS)


def reset_table_counters() -> None:
    with _counter_lock:
        _TABLE_COUNTERS.clear()


# ---------------------------------------------------------------------------
# Quantized distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantizedCdf:
    """Cumulative frequency table (0, c_1, ..., 2^16) over n symbols"""
    cumulative: Tuple[int, ...]

    def __post_init__(self):
        cum = self.cumulative
        if len(cum) < 3:
            raise CodecError(f"a table needs at least 2 symbols, got {max(len(cum) - 1, 0)}")
        if cum[0] != 0 or cum[-1] != TOTAL_FREQ:
            raise CodecError(f"cumulative table must run from 0 to {TOTAL_FREQ}")
        if any(b <= a for a, b in zip(cum, cum[1:])):
            raise CodecError("cumulative table must be strictly increasing (every frequency >= 1)")

    @classmethod
    def from_frequencies(cls, freqs: Sequence[int]) -> 'QuantizedCdf':
        cum = [0]
        for f in freqs:
            cum.append(cum[-1] + int(f))
        return cls(tuple(cum))

    @property
    def n_symbols(self) -> int:
        return len(self.cumulative) - 1

    def start(self, symbol: int) -> int:
        return self.cumulative[symbol]

    def freq(self, symbol: int) -> int:
        return self.cumulative[symbol + 1] - self.cumulative[symbol]

    def frequencies(self) -> List[int]:
        return [b - a for a, b in zip(self.cumulative, self.cumulative[1:])]

    def lookup(self, cf: int) -> int:
        """Symbol whose interval [start, start + freq) contains cf"""
        return bisect_right(self.cumulative, cf) - 1

    def bits(self, symbol: int) -> float:
        """Ideal code length -log2(f / 2^16)"""
        return PRECISION - math.log2(self.freq(symbol))


def bernoulli_frequencies(probs) -> np.ndarray:
    """
    Vectorised symbol-1 frequencies: p clamp vào [2^-16, 1 - 2^-16],
    f1 = floor(p * 2^16 + 0.5) clamp vào [1, 2^16 - 1]
    """
    p = np.asarray(probs, dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise NumericError("Bernoulli probabilities must be finite")
    p = np.clip(p, 1.0 / TOTAL_FREQ, 1.0 - 1.0 / TOTAL_FREQ)
    f1 = np.clip(np.floor(p * TOTAL_FREQ + 0.5).astype(np.int64), 1, TOTAL_FREQ - 1)
    _count('bernoulli', f1.size)
    return f1


def bernoulli_code_bits(f1: np.ndarray, bits: np.ndarray) -> float:
    """Ideal cost in bits of coding bits under the symbol-1 frequencies f1"""
    f1 = np.asarray(f1, dtype=np.float64)
    freq = np.where(np.asarray(bits) == 1, f1, TOTAL_FREQ - f1)
    return float(np.sum(PRECISION - np.log2(freq)))


def bernoulli_cdf_from_frequency(f1: int) -> QuantizedCdf:
    return QuantizedCdf((0, TOTAL_FREQ - int(f1), TOTAL_FREQ))


def bernoulli_cdfs(probs) -> List[QuantizedCdf]:
    f1 = bernoulli_frequencies(probs).ravel()
    return [QuantizedCdf((0, TOTAL_FREQ - f, TOTAL_FREQ)) for f in f1.tolist()]


def bernoulli_cdf(p: float) -> QuantizedCdf:
    """Bảng 2 symbol (0, 1) với P(1) = p"""
    return bernoulli_cdfs([p])[0]


@dataclass(frozen=True, eq=False)
class GaussianBuckets:
    """
    2^p_bits bucket có khối lượng prior N(0, 1) bằng nhau.
    boundaries[i] = Phi^-1(i / 2^p_bits) (±inf ở hai đầu), centers = trung vị prior của bucket.
    """
    p_bits: int
    boundaries: np.ndarray = field(repr=False)
    centers: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return 1 << self.p_bits

    def bucket_of(self, value: float) -> int:
        idx = int(np.searchsorted(self.boundaries, value, side='right')) - 1
        return min(max(idx, 0), self.count - 1)


@lru_cache(maxsize=None)
def make_buckets(p_bits: int = DEFAULT_P_BITS) -> GaussianBuckets:
    if not 1 <= p_bits <= PRECISION:
        raise RejectedInputError(f"p_bits must be in [1, {PRECISION}], got {p_bits}")
    n = 1 << p_bits
    boundaries = ndtri(np.arange(n + 1) / n)
    centers = ndtri((np.arange(n) + 0.5) / n)
    boundaries.setflags(write=False)
    centers.setflags(write=False)
    return GaussianBuckets(p_bits, boundaries, centers)


def std_normal_cdf(x) -> np.ndarray:
    """Phi(x)"""
    return ndtr(x)


def gaussian_bucket_cdf_prior(buckets: GaussianBuckets) -> QuantizedCdf:
    """Prior chính xác đều: mỗi bucket tần suất 2^(16 - p_bits)"""
    _count('gaussian_prior')
    f = TOTAL_FREQ >> buckets.p_bits
    return QuantizedCdf(tuple(range(0, TOTAL_FREQ + 1, f)))


def _bucket_masses(mu: float, sigma: float, boundaries: np.ndarray) -> np.ndarray:
    u = (boundaries - mu) / sigma
    lo, hi = u[:-1], u[1:]
    # upper tail via the complement to keep precision far above the mean
    direct = ndtr(hi) - ndtr(lo)
    upper = ndtr(-lo) - ndtr(-hi)
    return np.where(lo >= 0.0, upper, direct)


def quantize_masses(masses: np.ndarray) -> np.ndarray:
    """
    Largest-remainder rounding lên tổng 2^16, mỗi bucket >= 1,
    hoà (tie) ưu tiên bucket có index nhỏ hơn.
    """
    n = masses.shape[0]
    spare = TOTAL_FREQ - n
    if spare < 0:
        raise CodecError(f"{n} symbols do not fit in a {PRECISION}-bit table")
    masses = np.clip(masses, 0.0, None)
    norm = masses.sum()
    if not np.isfinite(norm) or norm <= 0.0:
        raise NumericError("distribution has no probability mass")
    target = masses / norm * spare
    base = np.floor(target).astype(np.int64)
    remainder = int(spare - base.sum())
    if remainder > 0:
        order = np.argsort(-(target - base), kind='stable')
        base[order[:remainder]] += 1
    return base + 1


def gaussian_bucket_cdf_posterior(mu: float, sigma: float, buckets: GaussianBuckets) -> QuantizedCdf:
    """
    Posterior N(mu, sigma^2) rời rạc hoá trên các bucket của prior.
    Raises:
        NumericError: sigma <= 0 hoặc tham số không hữu hạn
    """
    if not (math.isfinite(mu) and math.isfinite(sigma)) or sigma <= 0.0:
        raise NumericError(f"posterior needs finite mu and sigma > 0, got mu={mu}, sigma={sigma}")
    _count('gaussian_posterior')
    freqs = quantize_masses(_bucket_masses(float(mu), float(sigma), buckets.boundaries))
    return QuantizedCdf.from_frequencies(freqs.tolist())


# ---------------------------------------------------------------------------
# Coder state
# ---------------------------------------------------------------------------

class AnsState:
    """
    Message của rANS. Mutable, một owner tại một thời điểm; dùng copy()
    khi cần giữ snapshot.
    """
    __slots__ = ('head', 'stack')

    def __init__(self, head: int = RANS_L, stack: Sequence[int] = ()):
        self.head = int(head)
        self.stack: List[int] = [int(w) for w in stack]

    def copy(self) -> 'AnsState':
        return AnsState(self.head, self.stack)

    def __eq__(self, other) -> bool:
        return isinstance(other, AnsState) and self.head == other.head and self.stack == other.stack

    def __repr__(self) -> str:
        return f"AnsState(head=0x{self.head:016x}, words={len(self.stack)})"

    def push(self, symbol: int, cdf: QuantizedCdf) -> 'AnsState':
        """Encode symbol; emits 32-bit words while the head would overflow 64 bits"""
        if not 0 <= symbol < cdf.n_symbols:
            raise CodecError(f"symbol {symbol} outside table of {cdf.n_symbols} symbols")
        start = cdf.cumulative[symbol]
        freq = cdf.cumulative[symbol + 1] - start
        head = self.head
        bound = freq << (HEAD_BITS - PRECISION)
        while head >= bound:
            self.stack.append(head & WORD_MASK)
            head >>= WORD_BITS
        self.head = ((head // freq) << PRECISION) + (head % freq) + start
        return self

    def pop(self, cdf: QuantizedCdf) -> int:
        """Decode one symbol (exact inverse of push)"""
        head = self.head
        cf = head & (TOTAL_FREQ - 1)
        symbol = bisect_right(cdf.cumulative, cf) - 1
        start = cdf.cumulative[symbol]
        freq = cdf.cumulative[symbol + 1] - start
        head = freq * (head >> PRECISION) + cf - start
        while head < RANS_L:
            if not self.stack:
                raise MessageExhaustedError("message exhausted while renormalising")
            head = (head << WORD_BITS) | self.stack.pop()
        self.head = head
        return symbol

    def push_bit(self, bit: int, f1: int) -> 'AnsState':
        """Fast path for a two-symbol table (0, 2^16 - f1, 2^16)"""
        f1 = int(f1)
        if bit:
            start, freq = TOTAL_FREQ - f1, f1
        else:
            start, freq = 0, TOTAL_FREQ - f1
        head = self.head
        bound = freq << (HEAD_BITS - PRECISION)
        while head >= bound:
            self.stack.append(head & WORD_MASK)
            head >>= WORD_BITS
        self.head = ((head // freq) << PRECISION) + (head % freq) + start
        return self

    def pop_bit(self, f1: int) -> int:
        f1 = int(f1)
        head = self.head
        cf = head & (TOTAL_FREQ - 1)
        split = TOTAL_FREQ - f1
        if cf >= split:
            bit, start, freq = 1, split, f1
        else:
            bit, start, freq = 0, 0, split
        head = freq * (head >> PRECISION) + cf - start
        while head < RANS_L:
            if not self.stack:
                raise MessageExhaustedError("message exhausted while renormalising")
            head = (head << WORD_BITS) | self.stack.pop()
        self.head = head
        return bit

    def total_bits(self) -> int:
        """Bits occupied once flushed (32 per word)"""
        return WORD_BITS * (2 + len(self.stack))

    def information_bits(self) -> int:
        """Exact bit length of the message viewed as one big integer"""
        return self.head.bit_length() + WORD_BITS * len(self.stack)


def init_state(seed_words: Sequence[int] = ()) -> AnsState:
    """
    Khởi tạo state từ các word seed:
      - 0 word: head = 2^32, stack rỗng
      - 1 word: head = 2^32 | w0
      - k >= 2 word: head = ((w0 | 2^31) << 32) | w1, các word còn lại vào stack
    total_bits = 64 + 32 * max(k - 2, 0)
    """
    words = [int(w) & WORD_MASK for w in seed_words]
    if not words:
        return AnsState()
    if len(words) == 1:
        return AnsState(RANS_L | words[0])
    head = ((words[0] | HEAD_TOP) << WORD_BITS) | words[1]
    return AnsState(head, words[2:])


def seed_words_from(seed: int, count: int) -> List[int]:
    """Deterministic pseudo-random 32-bit words for the initial bits"""
    rng = np.random.default_rng(seed)
    return [int(w) for w in rng.integers(0, 1 << WORD_BITS, size=count, dtype=np.uint64)]


def flush(state: AnsState) -> List[int]:
    """[head_hi, head_lo, stack bottom ... stack top]"""
    return [state.head >> WORD_BITS, state.head & WORD_MASK] + list(state.stack)


def restore(words: Sequence[int]) -> AnsState:
    if len(words) < 2:
        raise CodecError(f"a flushed state has at least 2 words, got {len(words)}")
    words = [int(w) for w in words]
    if any(w < 0 or w > WORD_MASK for w in words):
        raise CodecError("flushed words must be 32-bit unsigned integers")
    head = (words[0] << WORD_BITS) | words[1]
    if head < RANS_L:
        raise CodecError("flushed head is below the renormalisation bound")
    return AnsState(head, words[2:])


def push(state: AnsState, symbol: int, cdf: QuantizedCdf) -> AnsState:
    return state.push(symbol, cdf)


def pop(state: AnsState, cdf: QuantizedCdf) -> Tuple[int, AnsState]:
    symbol = state.pop(cdf)
    return symbol, state


__all__ = [
    'PRECISION', 'TOTAL_FREQ', 'RANS_L', 'DEFAULT_P_BITS',
    'QuantizedCdf', 'GaussianBuckets', 'AnsState',
    'bernoulli_cdf', 'bernoulli_cdfs', 'bernoulli_frequencies', 'bernoulli_cdf_from_frequency',
    'bernoulli_code_bits',
    'make_buckets', 'std_normal_cdf', 'gaussian_bucket_cdf_prior', 'gaussian_bucket_cdf_posterior',
    'quantize_masses', 'init_state', 'seed_words_from', 'flush', 'restore', 'push', 'pop',
    'table_counters', 'reset_table_counters',
]
