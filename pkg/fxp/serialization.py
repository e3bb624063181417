import json
from fractions import Fraction

from nacl.encoding import HexEncoder
from nacl.hash import sha256


def canonical_json_dumps(payload) -> str:
    """Serialize payloads deterministically for reports and fingerprints."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_json_bytes(payload) -> bytes:
    return canonical_json_dumps(payload).encode("utf-8")


def canonical_json_hash(payload) -> str:
    return sha256(canonical_json_bytes(payload), encoder=HexEncoder).decode()


def parse_rational(raw) -> Fraction:
    """Accept an integer or a "p/q" string. Floats and decimal strings are refused."""
    if isinstance(raw, bool):
        raise ValueError(f"not a rational: {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, Fraction):
        return raw
    if isinstance(raw, str):
        if any(c in raw for c in ".eE"):
            raise ValueError(f"not a rational: {raw!r} (write p/q)")
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {raw!r}") from exc
    raise ValueError(f"not a rational: {raw!r}")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_decimal(value: Fraction) -> str:
    return f"{float(value):.6g}"


def format_rational_text(value: Fraction) -> str:
    """Text-mode rendering: exact value plus a 6-significant-digit decimal."""
    return f"{format_rational(value)} ({format_decimal(value)})"
