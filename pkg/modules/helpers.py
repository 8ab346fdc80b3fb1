import logging
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

import constants

log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def get_logger(name):
    """ Module logger writing to the shared app log. Safe to call repeatedly for the same name """
    logger = logging.getLogger(name)
    logger.setLevel(constants.LOG_LEVEL)
    if not any(isinstance(h, logging.FileHandler) for h in logger.handlers):
        log_dir = os.path.dirname(constants.LOG_FILE)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(constants.LOG_FILE)
        formatter = logging.Formatter(log_format)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    return logger


logger = get_logger(__name__)
_warned = set()


def warn_once(key, message):
    """ Log a declared discrepancy a single time per process """
    if key not in _warned:
        _warned.add(key)
        logger.warning(message)


class HypergraphError(Exception):
    exit_code = constants.EXIT_VERIFICATION


class InvalidInputError(HypergraphError):
    exit_code = constants.EXIT_USAGE

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PreconditionError(InvalidInputError):
    pass


class CapExceededError(HypergraphError):
    exit_code = constants.EXIT_CAP


class VerificationError(HypergraphError):
    exit_code = constants.EXIT_VERIFICATION


def rng_for(seed, *names):
    """ Independent generator for a named sub-stream of one run seed.

    Streams depend only on (seed, names), so parallel callers reproduce the
    same draws regardless of scheduling.
    """
    keys = [zlib.crc32(str(name).encode()) for name in names]
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *keys]))


def as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10 ** 9)
    return Fraction(value)


def bits(mask):
    """ Indices of the set bits of mask, ascending """
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_of(indices):
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def popcount(mask):
    return bin(mask).count('1')


def fraction_json(value):
    """ Exact rational plus a float rendering, as stored in reports """
    value = as_fraction(value)
    return {'exact': f"{value.numerator}/{value.denominator}", 'value': float(value)}


def pmap(fn, items, threads=None):
    """ Order-preserving parallel map; results line up with items whatever the scheduling """
    items = list(items)
    threads = constants.THREADS if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
